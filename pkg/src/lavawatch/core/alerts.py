from __future__ import annotations

import json
import threading
from collections.abc import Sequence
from dataclasses import dataclass
from datetime import UTC, datetime

from lavawatch.core.errors import NoFlows
from lavawatch.core.interfaces import (
    Direction,
    EruptionEvent,
    FlowBlob,
    FlowTrajectory,
    Frame,
    Severity,
)

SMS_MAX_CHARS = 160
SERIAL_TERMINATOR = b"\n"
SEVERITY_CODES: dict[Severity, bytes] = {
    Severity.WATCH: b"W",
    Severity.WARNING: b"A",
    Severity.CRITICAL: b"C",
}
DIRECTION_CODES: dict[Direction, bytes] = {
    Direction.NE: b"1",
    Direction.NW: b"2",
    Direction.SW: b"3",
    Direction.SE: b"4",
    Direction.INDETERMINATE: b"0",
}
_SEVERITY_BY_CODE = {code[0]: severity for severity, code in SEVERITY_CODES.items()}
_DIRECTION_BY_CODE = {code[0]: direction for direction, code in DIRECTION_CODES.items()}
_SMS_DIRECTION_LABELS = {Direction.INDETERMINATE: "IND"}


@dataclass(frozen=True)
class SeverityPolicy:
    watch_fraction: float = 0.005
    warning_fraction: float = 0.02

    def __post_init__(self) -> None:
        if not 0.0 < self.watch_fraction <= self.warning_fraction <= 1.0:
            raise ValueError("severity fractions must satisfy 0 < watch <= warning <= 1")

    def classify(self, total_area: int, frame_area: int) -> Severity:
        share = total_area / frame_area
        if share < self.watch_fraction:
            return Severity.WATCH
        if share < self.warning_fraction:
            return Severity.WARNING
        return Severity.CRITICAL


class EventBuilder:
    def __init__(self, policy: SeverityPolicy | None = None, first_event_id: int = 1) -> None:
        self._policy = policy or SeverityPolicy()
        self._next_id = first_event_id
        self._lock = threading.Lock()

    def build(
        self,
        flows: Sequence[tuple[FlowBlob, FlowTrajectory]],
        frame: Frame,
        timestamp_ms: int | None = None,
    ) -> EruptionEvent:
        if not flows:
            raise NoFlows("an event needs at least one flow")
        total_area = sum(blob.area for blob, _ in flows)
        with self._lock:
            event_id = self._next_id
            self._next_id += 1
        return EruptionEvent(
            event_id=event_id,
            timestamp_ms=frame.timestamp_ms if timestamp_ms is None else timestamp_ms,
            frame_id=frame.frame_id,
            flows=tuple(flows),
            severity=self._policy.classify(total_area, frame.area),
        )


def event_to_payload(event: EruptionEvent) -> dict[str, object]:
    return {
        "event_id": event.event_id,
        "timestamp_ms": event.timestamp_ms,
        "frame_id": event.frame_id,
        "severity": event.severity.value,
        "flows": [flow_to_payload(blob, trajectory) for blob, trajectory in event.flows],
        "snapshot": event.snapshot_path,
    }


def flow_to_payload(blob: FlowBlob, trajectory: FlowTrajectory) -> dict[str, object]:
    return {
        "area": blob.area,
        "centroid": [round(blob.centroid[0], 3), round(blob.centroid[1], 3)],
        "grados": round(trajectory.grados, 3),
        "direction": trajectory.direction.value,
        "deviation": round(trajectory.displayed_deviation, 3),
    }


def event_to_json_bytes(event: EruptionEvent) -> bytes:
    """Canonical event document shared by the webhook, the event log and the monitor."""
    return json.dumps(event_to_payload(event), separators=(",", ":")).encode("utf-8")


def format_sms(event: EruptionEvent) -> str:
    """Single GSM-7-safe line of at most 160 characters; the direction list is elided first."""
    directions = [
        _SMS_DIRECTION_LABELS.get(trajectory.direction, trajectory.direction.value)
        for _, trajectory in event.flows
    ]
    stamp = datetime.fromtimestamp(event.timestamp_ms / 1000, tz=UTC).strftime(
        "%Y-%m-%dT%H:%M:%SZ",
    )

    def render(dir_text: str) -> str:
        return (
            f"VOLCAN ALERTA {event.severity.value.upper()} flujos={len(event.flows)} "
            f"dir={dir_text} area={event.total_area}px t={stamp}"
        )

    text = render(",".join(directions))
    kept = len(directions)
    while len(text) > SMS_MAX_CHARS and kept > 0:
        kept -= 1
        text = render(",".join([*directions[:kept], f"+{len(directions) - kept}"]))
    text = text.encode("ascii", errors="replace").decode("ascii")
    return text[:SMS_MAX_CHARS]


def encode_serial(event: EruptionEvent) -> bytes:
    body = b"".join(DIRECTION_CODES[trajectory.direction] for _, trajectory in event.flows)
    return SEVERITY_CODES[event.severity] + body + SERIAL_TERMINATOR


def decode_serial(data: bytes) -> tuple[Severity, tuple[Direction, ...]]:
    if len(data) < 2 or not data.endswith(SERIAL_TERMINATOR):
        raise ValueError("serial frame must hold a severity byte and end with a newline")
    severity = _SEVERITY_BY_CODE.get(data[0])
    if severity is None:
        raise ValueError(f"unknown severity code: {data[:1]!r}")
    directions: list[Direction] = []
    for code in data[1:-1]:
        direction = _DIRECTION_BY_CODE.get(code)
        if direction is None:
            raise ValueError(f"unknown direction code: {bytes([code])!r}")
        directions.append(direction)
    return severity, tuple(directions)
