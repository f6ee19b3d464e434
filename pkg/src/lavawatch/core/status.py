from __future__ import annotations

import threading
import time
from collections import deque
from collections.abc import Callable
from dataclasses import replace

from lavawatch.core.interfaces import (
    EruptionEvent,
    EventSummary,
    Frame,
    PipelineState,
    StatusSnapshot,
)

FPS_WINDOW = 30


class StatusBoard:
    """Single-writer status shared with the monitor service.

    The pipeline replaces an immutable StatusSnapshot on every update; readers only
    ever see a complete snapshot. Event history is a bounded ring of serialized payloads.
    """

    def __init__(
        self,
        max_event_history: int = 256,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        if max_event_history < 1:
            raise ValueError("max_event_history must be >= 1")
        self._clock = clock
        self._started_at = clock()
        self._lock = threading.Lock()
        self._snapshot = StatusSnapshot()
        self._events: deque[bytes] = deque(maxlen=max_event_history)
        self._frame_times: deque[float] = deque(maxlen=FPS_WINDOW)
        self._latest_frame: Frame | None = None

    def mark_running(self) -> None:
        with self._lock:
            self._snapshot = replace(self._snapshot, pipeline_state=PipelineState.RUNNING)

    def mark_idle(self) -> None:
        with self._lock:
            self._snapshot = replace(self._snapshot, pipeline_state=PipelineState.IDLE)

    def mark_degraded(self) -> None:
        with self._lock:
            self._snapshot = replace(self._snapshot, pipeline_state=PipelineState.DEGRADED)

    def record_frame(self, frame: Frame | None, ok: bool = True) -> None:
        now = self._clock()
        with self._lock:
            self._frame_times.append(now)
            if frame is not None:
                self._latest_frame = frame
            self._snapshot = replace(
                self._snapshot,
                frames_processed=self._snapshot.frames_processed + 1,
                current_fps=self._fps(),
                pipeline_state=PipelineState.RUNNING if ok else PipelineState.DEGRADED,
            )

    def record_event(self, event: EruptionEvent, payload: bytes, ok: bool = True) -> None:
        summary = EventSummary(
            event_id=event.event_id,
            frame_id=event.frame_id,
            timestamp_ms=event.timestamp_ms,
            severity=event.severity,
            flows=len(event.flows),
            total_area=event.total_area,
        )
        with self._lock:
            self._events.append(payload)
            self._snapshot = replace(
                self._snapshot,
                events_total=self._snapshot.events_total + 1,
                last_event=summary,
                pipeline_state=PipelineState.RUNNING if ok else PipelineState.DEGRADED,
            )

    def snapshot(self) -> StatusSnapshot:
        current = self._snapshot
        return replace(current, uptime_s=max(0.0, self._clock() - self._started_at))

    def recent_events(self, limit: int | None = None) -> list[bytes]:
        with self._lock:
            items = list(self._events)
        items.reverse()
        return items if limit is None else items[: max(0, limit)]

    def latest_frame(self) -> Frame | None:
        return self._latest_frame

    def _fps(self) -> float:
        if len(self._frame_times) < 2:
            return 0.0
        span = self._frame_times[-1] - self._frame_times[0]
        if span <= 0:
            return 0.0
        return (len(self._frame_times) - 1) / span
