from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

from lavawatch.core.errors import IoFailure
from lavawatch.core.imaging import encode_png
from lavawatch.core.interfaces import EruptionEvent, Frame

LOG = logging.getLogger(__name__)


def snapshot_name(event: EruptionEvent) -> str:
    return f"event_{event.event_id}_{event.frame_id}.png"


def snapshot_path(event: EruptionEvent, snapshot_dir: str | Path) -> str:
    return str(Path(snapshot_dir) / snapshot_name(event))


def persist_snapshot(frame: Frame, event: EruptionEvent, snapshot_dir: str | Path) -> str:
    path = Path(snapshot_path(event, snapshot_dir))
    _write_png(path, frame)
    LOG.info("snapshot persisted event_id=%s path=%s", event.event_id, path)
    return str(path)


def persist_pre_event_frames(
    frames: Sequence[Frame],
    event: EruptionEvent,
    snapshot_dir: str | Path,
) -> list[str]:
    """Write buffered frames preceding the event, newest first as pre1, pre2, ..."""
    paths: list[str] = []
    for k, frame in enumerate(reversed(frames), start=1):
        path = Path(snapshot_dir) / f"event_{event.event_id}_{event.frame_id}_pre{k}.png"
        _write_png(path, frame)
        paths.append(str(path))
    if paths:
        LOG.info("pre-event frames persisted event_id=%s count=%s", event.event_id, len(paths))
    return paths


def _write_png(path: Path, frame: Frame) -> None:
    try:
        path.write_bytes(encode_png(frame))
    except OSError as exc:
        raise IoFailure(f"cannot write snapshot {path}: {exc}") from exc
