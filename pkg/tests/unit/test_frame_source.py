from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import pytest

from lavawatch.core.errors import MalformedImage
from lavawatch.core.imaging import encode_png, frame_from_array
from lavawatch.core.interfaces import Frame, SkippedFrame
from lavawatch.infra.frame_source import (
    RECORD_HEADER,
    encode_frame_record,
    iter_frame_directory,
    iter_frame_stream,
    list_frame_files,
    read_frame_stream,
    write_frame_stream,
)


def _frames(count: int) -> list[Frame]:
    rng = np.random.default_rng(count)
    return [
        frame_from_array(rng.integers(0, 256, size=(3, 4, 3)), frame_id=i, timestamp_ms=i * 40)
        for i in range(count)
    ]


def test_directory_frames_in_name_order(tmp_path: Path) -> None:
    frames = _frames(3)
    for name, frame in zip(("b.png", "a.png", "c.ppm"), frames, strict=True):
        if name.endswith(".png"):
            (tmp_path / name).write_bytes(encode_png(frame))
        else:
            (tmp_path / name).write_bytes(b"P6 4 3 255\n" + frame.pixels.tobytes())
    (tmp_path / "notes.txt").write_text("ignored", encoding="utf-8")

    assert [p.name for p in list_frame_files(tmp_path)] == ["a.png", "b.png", "c.ppm"]
    items = list(iter_frame_directory(tmp_path, frame_interval_ms=50, start_timestamp_ms=1000))

    assert [item.frame_id for item in items] == [0, 1, 2]
    assert [item.timestamp_ms for item in items] == [1000, 1050, 1100]
    assert np.array_equal(items[0].pixels, frames[1].pixels)
    assert np.array_equal(items[1].pixels, frames[0].pixels)
    assert np.array_equal(items[2].pixels, frames[2].pixels)


def test_directory_skips_undecodable_file(tmp_path: Path) -> None:
    (tmp_path / "000.png").write_bytes(encode_png(_frames(1)[0]))
    (tmp_path / "001.png").write_bytes(b"\x89PNG\r\n\x1a\ngarbage")
    (tmp_path / "002.png").write_bytes(encode_png(_frames(1)[0]))

    items = list(iter_frame_directory(tmp_path))

    assert isinstance(items[1], SkippedFrame)
    assert items[1].frame_id == 1
    assert isinstance(items[0], Frame)
    assert isinstance(items[2], Frame)
    assert items[2].frame_id == 2


def test_stream_round_trip() -> None:
    frames = _frames(4)
    buffer = io.BytesIO()

    assert write_frame_stream(frames, buffer) == 4
    buffer.seek(0)
    decoded = list(read_frame_stream(buffer))

    assert [frame.frame_id for frame in decoded] == [0, 1, 2, 3]
    assert [frame.timestamp_ms for frame in decoded] == [0, 40, 80, 120]
    for original, copy in zip(frames, decoded, strict=True):
        assert np.array_equal(original.pixels, copy.pixels)


def test_stream_record_layout() -> None:
    frame = frame_from_array(np.full((1, 2, 3), 7), timestamp_ms=258)

    record = encode_frame_record(frame)

    header = b"\x00\x00\x00\x02\x00\x00\x00\x01" + (258).to_bytes(8, "big")
    assert record[: RECORD_HEADER.size] == header
    assert record[RECORD_HEADER.size :] == bytes([7] * 6)


@pytest.mark.parametrize(
    "data",
    [
        RECORD_HEADER.pack(2, 2, 0)[:5],
        RECORD_HEADER.pack(2, 2, 0) + bytes(5),
        RECORD_HEADER.pack(0, 2, 0),
    ],
)
def test_stream_rejects_bad_records(data: bytes) -> None:
    with pytest.raises(MalformedImage):
        list(read_frame_stream(io.BytesIO(data)))


def test_stream_file_truncated_tail_yields_skip(tmp_path: Path) -> None:
    path = tmp_path / "in.frames"
    frames = _frames(2)
    path.write_bytes(b"".join(encode_frame_record(f) for f in frames) + RECORD_HEADER.pack(4, 3, 0))

    items = list(iter_frame_stream(path))

    assert [type(item) for item in items] == [Frame, Frame, SkippedFrame]
    assert items[2].frame_id == 2
