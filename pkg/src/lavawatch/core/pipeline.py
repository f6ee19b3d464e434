from __future__ import annotations

import asyncio
import contextlib
import logging
import sys
import time
from collections import deque
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import BinaryIO

import numpy as np

from lavawatch.core.alerts import EventBuilder, SeverityPolicy, event_to_json_bytes
from lavawatch.core.blobs import describe_blobs, filter_blobs, flow_bodies, label_components
from lavawatch.core.concurrency import DispatchQueue, PendingEvent
from lavawatch.core.config import PipelineConfig
from lavawatch.core.detect import detect_perturbation
from lavawatch.core.dispatch import AlertDispatcher, Sleep
from lavawatch.core.errors import DimensionMismatch, IoFailure
from lavawatch.core.interfaces import (
    AlertSink,
    BinaryMask,
    DeliveryReport,
    DetectParams,
    EruptionEvent,
    FlowBlob,
    FlowTrajectory,
    Frame,
    HoughLine,
    HoughParams,
    SkippedFrame,
)
from lavawatch.core.status import StatusBoard
from lavawatch.core.trajectory import FlowTracker, hough_transform
from lavawatch.infra.frame_source import iter_frame_directory, iter_frame_stream
from lavawatch.infra.monitor_server import serve_status
from lavawatch.infra.sinks import build_sinks
from lavawatch.infra.snapshots import persist_pre_event_frames, persist_snapshot, snapshot_path

LOG = logging.getLogger(__name__)
DISPATCH_MAX_PENDING = 64

FrameItem = Frame | SkippedFrame


@dataclass(frozen=True)
class FrameAnalysis:
    mask: BinaryMask
    blobs: tuple[FlowBlob, ...]
    lines: tuple[HoughLine, ...]
    bodies: Mapping[int, FlowBlob] = field(default_factory=dict)


class FlowDetector:
    def __init__(self, params: DetectParams | None = None, hough: HoughParams | None = None):
        self.params = params or DetectParams()
        self.hough = hough or HoughParams()

    def analyze(self, prev: Frame, curr: Frame) -> FrameAnalysis:
        mask = detect_perturbation(prev, curr, self.params)
        labels, blobs = label_components(mask, self.params.connectivity)
        kept = filter_blobs(blobs, self.params.min_blob_area)
        if not kept:
            return FrameAnalysis(mask=mask, blobs=(), lines=())
        kept = describe_blobs(labels, kept)
        if len(kept) == len(blobs):
            flow_mask = labels > 0
        else:
            keep = np.zeros(len(blobs) + 1, dtype=bool)
            keep[[blob.label for blob in kept]] = True
            flow_mask = keep[labels]
        lines = hough_transform(flow_mask, self.hough)
        return FrameAnalysis(
            mask=mask,
            blobs=tuple(kept),
            lines=tuple(lines),
            bodies=flow_bodies(curr, labels, kept, self.params),
        )


class EventStage:
    def __init__(
        self,
        params: DetectParams | None = None,
        hough: HoughParams | None = None,
        severity: SeverityPolicy | None = None,
    ) -> None:
        self._detector = FlowDetector(params, hough)
        self._tracker = FlowTracker()
        self._builder = EventBuilder(severity)

    def reset(self) -> None:
        self._tracker.reset()

    def step(
        self,
        prev: Frame,
        curr: Frame,
        timestamp_ms: int | None = None,
    ) -> EruptionEvent | None:
        analysis = self._detector.analyze(prev, curr)
        flows = self._tracker.step(analysis.blobs, analysis.lines, analysis.bodies)
        if not flows:
            return None
        return self._builder.build(flows, curr, timestamp_ms)


def detect_flows(
    prev: Frame,
    curr: Frame,
    params: DetectParams | None = None,
    hough: HoughParams | None = None,
) -> list[tuple[FlowBlob, FlowTrajectory]]:
    """Single-pair detection without motion history."""
    analysis = FlowDetector(params, hough).analyze(prev, curr)
    return FlowTracker().step(analysis.blobs, analysis.lines, analysis.bodies)


@dataclass(frozen=True)
class PipelineMetrics:
    frames: int = 0
    skipped: int = 0
    failed: int = 0
    events: int = 0
    delivery_failures: int = 0
    total_latency_ms: float = 0.0
    elapsed_s: float = 0.0

    @property
    def mean_latency_ms(self) -> float:
        return self.total_latency_ms / self.frames if self.frames else 0.0

    @property
    def fps(self) -> float:
        return self.frames / self.elapsed_s if self.elapsed_s > 0 else 0.0

    def as_dict(self) -> dict[str, float | int]:
        return {
            "frames": self.frames,
            "skipped": self.skipped,
            "failed": self.failed,
            "events": self.events,
            "delivery_failures": self.delivery_failures,
            "mean_latency_ms": round(self.mean_latency_ms, 3),
            "fps": round(self.fps, 3),
        }


class FlowPipeline:
    """Sequential frame loop; events are logged in frame order and dispatched in that order."""

    def __init__(
        self,
        cfg: PipelineConfig,
        sinks: Sequence[AlertSink] = (),
        board: StatusBoard | None = None,
        event_log: BinaryIO | None = None,
        sleep: Sleep = asyncio.sleep,
        wall_clock: Callable[[], float] = time.time,
        perf_clock: Callable[[], float] = time.perf_counter,
    ) -> None:
        self._cfg = cfg
        self._stage = EventStage(cfg.detect, cfg.hough, cfg.severity)
        self._dispatcher = AlertDispatcher(sinks, cfg.retry, sleep)
        self._board = board or StatusBoard(max_event_history=cfg.monitor.max_event_history)
        self._event_log = event_log
        self._wall_clock = wall_clock
        self._perf_clock = perf_clock
        self._recent: deque[Frame] = deque(maxlen=cfg.pre_event_frames)
        self._delivery_failures = 0
        self.reports: list[DeliveryReport] = []

    @property
    def board(self) -> StatusBoard:
        return self._board

    async def run(self, frames: Iterable[FrameItem]) -> PipelineMetrics:
        queue = DispatchQueue(self._publish, max_pending=DISPATCH_MAX_PENDING)
        await queue.start()
        self._board.mark_running()
        started = self._perf_clock()
        counts = {"frames": 0, "skipped": 0, "failed": 0, "events": 0}
        total_latency_ms = 0.0
        prev: Frame | None = None
        try:
            for item in frames:
                if isinstance(item, SkippedFrame):
                    counts["skipped"] += 1
                    self._board.record_frame(None, ok=False)
                    LOG.warning("frame skipped frame_id=%s reason=%s", item.frame_id, item.reason)
                    continue
                t0 = self._perf_clock()
                ok = True
                try:
                    pending = self._process(prev, item)
                except DimensionMismatch as exc:
                    ok = False
                    counts["failed"] += 1
                    LOG.warning("frame size changed frame_id=%s error=%s", item.frame_id, exc)
                    self._stage.reset()
                    self._recent.clear()
                    pending = None
                except Exception:
                    ok = False
                    counts["failed"] += 1
                    LOG.exception("frame processing failed frame_id=%s", item.frame_id)
                    pending = None
                total_latency_ms += (self._perf_clock() - t0) * 1000.0
                counts["frames"] += 1
                self._board.record_frame(item, ok=ok)
                if pending is not None:
                    counts["events"] += 1
                    await queue.enqueue(pending)
                self._recent.append(item)
                prev = item
                await asyncio.sleep(0)
            await queue.drain()
        finally:
            await queue.stop()
            self._board.mark_idle()
        metrics = PipelineMetrics(
            frames=counts["frames"],
            skipped=counts["skipped"],
            failed=counts["failed"],
            events=counts["events"],
            delivery_failures=self._delivery_failures,
            total_latency_ms=total_latency_ms,
            elapsed_s=self._perf_clock() - started,
        )
        LOG.info(
            "pipeline finished frames=%s events=%s skipped=%s failed=%s mean_latency_ms=%.3f",
            metrics.frames,
            metrics.events,
            metrics.skipped,
            metrics.failed,
            metrics.mean_latency_ms,
        )
        return metrics

    def _process(self, prev: Frame | None, curr: Frame) -> PendingEvent | None:
        if prev is None:
            return None
        event = self._stage.step(prev, curr)
        if event is None:
            return None
        if self._cfg.live:
            event = replace(event, timestamp_ms=int(self._wall_clock() * 1000))
        event = replace(event, snapshot_path=snapshot_path(event, self._cfg.snapshot_dir))
        stored = asyncio.ensure_future(
            asyncio.to_thread(self._store_snapshots, curr, event, tuple(self._recent)),
        )
        return PendingEvent(event, stored)

    def _store_snapshots(
        self,
        frame: Frame,
        event: EruptionEvent,
        recent: Sequence[Frame],
    ) -> bool:
        try:
            persist_snapshot(frame, event, self._cfg.snapshot_dir)
            persist_pre_event_frames(recent, event, self._cfg.snapshot_dir)
        except IoFailure as exc:
            LOG.error("snapshot failed event_id=%s error=%s", event.event_id, exc)
            return False
        return True

    async def _publish(self, event: EruptionEvent, stored: bool) -> None:
        if not stored:
            event = replace(event, snapshot_path=None)
        payload = event_to_json_bytes(event)
        if self._event_log is not None:
            self._event_log.write(payload + b"\n")
            self._event_log.flush()
        self._board.record_event(event, payload, ok=stored)
        LOG.info(
            "event built event_id=%s frame_id=%s severity=%s flows=%s",
            event.event_id,
            event.frame_id,
            event.severity.value,
            len(event.flows),
        )
        report = await self._dispatcher.dispatch(event)
        self.reports.append(report)
        if not report.all_delivered:
            self._delivery_failures += 1
            self._board.mark_degraded()


def open_frame_source(cfg: PipelineConfig) -> Iterator[FrameItem]:
    if cfg.frames_dir is not None:
        return iter_frame_directory(
            cfg.frames_dir,
            frame_interval_ms=cfg.frame_interval_ms,
            start_timestamp_ms=cfg.start_timestamp_ms,
        )
    if cfg.stream_path is None:
        raise ValueError("config has no frame input")
    return iter_frame_stream(cfg.stream_path)


@contextlib.contextmanager
def open_event_log(target: str) -> Iterator[BinaryIO]:
    if target == "-":
        yield sys.stdout.buffer
        return
    try:
        handle = open(target, "ab")
    except OSError as exc:
        raise IoFailure(f"cannot open event log {target}: {exc}") from exc
    with handle:
        yield handle


async def run_pipeline(
    cfg: PipelineConfig,
    sinks: Sequence[AlertSink] | None = None,
    frames: Iterable[FrameItem] | None = None,
    event_log: BinaryIO | None = None,
    sleep: Sleep = asyncio.sleep,
) -> PipelineMetrics:
    board = StatusBoard(max_event_history=cfg.monitor.max_event_history)
    monitor = serve_status(cfg.monitor, board) if cfg.monitor.enabled else None
    try:
        resolved_sinks = build_sinks(cfg.sinks, cfg.sink_timeout_sec) if sinks is None else sinks
        source = open_frame_source(cfg) if frames is None else frames
        with contextlib.ExitStack() as stack:
            log = event_log if event_log is not None else stack.enter_context(
                open_event_log(cfg.event_log),
            )
            pipeline = FlowPipeline(cfg, resolved_sinks, board=board, event_log=log, sleep=sleep)
            return await pipeline.run(source)
    finally:
        if monitor is not None:
            monitor.stop()
