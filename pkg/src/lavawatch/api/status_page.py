from __future__ import annotations

import html
import importlib.resources
import json
from collections.abc import Sequence
from functools import lru_cache
from string import Template

from lavawatch.core.interfaces import StatusSnapshot

PAGE_EVENT_ROWS = 10


def render_status_page(title: str, snapshot: StatusSnapshot, events: Sequence[bytes]) -> str:
    last = snapshot.last_event
    if last is None:
        last_event = "No events yet."
    else:
        last_event = (
            f"#{last.event_id} on frame {last.frame_id}: {last.severity.value}, "
            f"{last.flows} flow(s), {last.total_area} px"
        )
    return _load_html_template().substitute(
        TITLE=html.escape(title),
        STATE=html.escape(snapshot.pipeline_state.value),
        STATE_CLASS=snapshot.pipeline_state.value.lower(),
        UPTIME=_format_uptime(snapshot.uptime_s),
        FRAMES=snapshot.frames_processed,
        EVENTS=snapshot.events_total,
        FPS=f"{snapshot.current_fps:.1f}",
        LAST_EVENT=html.escape(last_event),
        EVENT_ROWS=_render_event_rows(events[:PAGE_EVENT_ROWS]),
    )


@lru_cache(maxsize=1)
def _load_html_template() -> Template:
    template = (
        importlib.resources.files("lavawatch")
        .joinpath("templates/status_page.html")
        .read_text(encoding="utf-8")
    )
    return Template(template)


def _render_event_rows(events: Sequence[bytes]) -> str:
    if not events:
        return "      <tr><td colspan='6'>No events captured.</td></tr>"
    rows = []
    for raw in events:
        payload = json.loads(raw)
        flows = payload["flows"]
        severity = html.escape(str(payload["severity"]))
        directions = ",".join(str(flow["direction"]) for flow in flows)
        area = sum(int(flow["area"]) for flow in flows)
        rows.append(
            "      <tr>"
            f"<td>{payload['event_id']}</td>"
            f"<td>{payload['frame_id']}</td>"
            f"<td class='sev-{severity}'>{severity}</td>"
            f"<td>{len(flows)}</td>"
            f"<td>{html.escape(directions)}</td>"
            f"<td>{area}</td>"
            "</tr>"
        )
    return "\n".join(rows)


def _format_uptime(seconds: float) -> str:
    total = int(seconds)
    hours, rem = divmod(total, 3600)
    minutes, secs = divmod(rem, 60)
    return f"{hours:d}:{minutes:02d}:{secs:02d}"
