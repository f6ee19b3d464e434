from __future__ import annotations

import logging
import struct
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import BinaryIO

import numpy as np

from lavawatch.core.errors import MalformedImage, UnsupportedFormat
from lavawatch.core.imaging import decode_frame
from lavawatch.core.interfaces import Frame, SkippedFrame

LOG = logging.getLogger(__name__)

# u32 width | u32 height | u64 timestamp_ms, all big-endian, then width*height*3 RGB bytes.
RECORD_HEADER = struct.Struct(">IIQ")
IMAGE_SUFFIXES = {".png", ".ppm"}


def list_frame_files(frames_dir: str | Path) -> list[Path]:
    root = Path(frames_dir)
    return sorted(
        (p for p in root.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES),
        key=lambda p: p.name,
    )


def iter_frame_directory(
    frames_dir: str | Path,
    frame_interval_ms: int = 100,
    start_timestamp_ms: int = 0,
) -> Iterator[Frame | SkippedFrame]:
    """Frames in filename order; undecodable files become SkippedFrame entries."""
    for index, path in enumerate(list_frame_files(frames_dir)):
        timestamp_ms = start_timestamp_ms + index * frame_interval_ms
        try:
            data = path.read_bytes()
            yield decode_frame(data, frame_id=index, timestamp_ms=timestamp_ms)
        except (MalformedImage, UnsupportedFormat, OSError) as exc:
            LOG.warning("frame decode failed frame_id=%s path=%s error=%s", index, path, exc)
            yield SkippedFrame(frame_id=index, reason=str(exc))


def read_frame_stream(stream: BinaryIO, first_frame_id: int = 0) -> Iterator[Frame]:
    frame_id = first_frame_id
    while True:
        header = stream.read(RECORD_HEADER.size)
        if not header:
            return
        if len(header) < RECORD_HEADER.size:
            raise MalformedImage(f"truncated record header at frame_id={frame_id}")
        width, height, timestamp_ms = RECORD_HEADER.unpack(header)
        if width < 1 or height < 1:
            raise MalformedImage(f"empty raster {width}x{height} at frame_id={frame_id}")
        expected = width * height * 3
        body = stream.read(expected)
        if len(body) < expected:
            raise MalformedImage(
                f"truncated record body at frame_id={frame_id}: {len(body)} of {expected} bytes",
            )
        pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3).copy()
        yield Frame(pixels=pixels, frame_id=frame_id, timestamp_ms=timestamp_ms)
        frame_id += 1


def iter_frame_stream(path: str | Path) -> Iterator[Frame | SkippedFrame]:
    """Read a frame-stream file; a truncated tail ends the stream with one SkippedFrame."""
    next_id = 0
    with open(path, "rb") as handle:
        try:
            for frame in read_frame_stream(handle):
                next_id = frame.frame_id + 1
                yield frame
        except MalformedImage as exc:
            LOG.warning("frame stream ended early frame_id=%s error=%s", next_id, exc)
            yield SkippedFrame(frame_id=next_id, reason=str(exc))


def encode_frame_record(frame: Frame) -> bytes:
    header = RECORD_HEADER.pack(frame.width, frame.height, frame.timestamp_ms)
    return header + np.ascontiguousarray(frame.pixels).tobytes()


def write_frame_stream(frames: Iterable[Frame], stream: BinaryIO) -> int:
    count = 0
    for frame in frames:
        stream.write(encode_frame_record(frame))
        count += 1
    return count
