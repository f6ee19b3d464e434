from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from lavawatch.core.errors import IoFailure
from lavawatch.core.imaging import decode_frame
from lavawatch.infra.snapshots import persist_pre_event_frames, persist_snapshot, snapshot_name


def test_snapshot_written_as_png(tmp_path: Path, make_event, make_frame) -> None:
    frame = make_frame(fill=(200, 10, 30))
    event = make_event(event_id=5, frame_id=42)

    path = persist_snapshot(frame, event, tmp_path)

    assert path == str(tmp_path / "event_5_42.png")
    assert snapshot_name(event) == "event_5_42.png"
    assert np.array_equal(decode_frame(Path(path).read_bytes()).pixels, frame.pixels)


def test_pre_event_frames_newest_first(tmp_path: Path, make_event, make_frame) -> None:
    older = make_frame(fill=(1, 1, 1))
    newer = make_frame(fill=(2, 2, 2))

    paths = persist_pre_event_frames([older, newer], make_event(event_id=3, frame_id=9), tmp_path)

    assert [Path(p).name for p in paths] == ["event_3_9_pre1.png", "event_3_9_pre2.png"]
    assert decode_frame(Path(paths[0]).read_bytes()).pixels[0, 0].tolist() == [2, 2, 2]
    assert persist_pre_event_frames([], make_event(), tmp_path) == []


def test_snapshot_failure_raises_io_failure(tmp_path: Path, make_event, make_frame) -> None:
    with pytest.raises(IoFailure):
        persist_snapshot(make_frame(), make_event(), tmp_path / "missing")
