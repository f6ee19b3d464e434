from __future__ import annotations

from pydantic import BaseModel

from lavawatch.core.interfaces import EventSummary, PipelineState, Severity, StatusSnapshot


class EventSummaryModel(BaseModel):
    event_id: int
    frame_id: int
    timestamp_ms: int
    severity: Severity
    flows: int
    total_area: int


class StatusResponse(BaseModel):
    uptime_s: float
    frames_processed: int
    events_total: int
    last_event: EventSummaryModel | None = None
    current_fps: float
    pipeline_state: PipelineState

    @classmethod
    def from_snapshot(cls, snapshot: StatusSnapshot) -> StatusResponse:
        return cls(
            uptime_s=round(snapshot.uptime_s, 3),
            frames_processed=snapshot.frames_processed,
            events_total=snapshot.events_total,
            last_event=_summary_model(snapshot.last_event),
            current_fps=round(snapshot.current_fps, 3),
            pipeline_state=snapshot.pipeline_state,
        )


class ErrorResponse(BaseModel):
    detail: str


def _summary_model(summary: EventSummary | None) -> EventSummaryModel | None:
    if summary is None:
        return None
    return EventSummaryModel(
        event_id=summary.event_id,
        frame_id=summary.frame_id,
        timestamp_ms=summary.timestamp_ms,
        severity=summary.severity,
        flows=summary.flows,
        total_area=summary.total_area,
    )
