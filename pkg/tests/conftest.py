from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from lavawatch.core.auth import hash_password
from lavawatch.core.interfaces import (
    Direction,
    EruptionEvent,
    FlowBlob,
    FlowTrajectory,
    Frame,
    MonitorConfig,
    Severity,
    TrajectorySource,
)

MONITOR_PASSWORD = "s3cret"


@pytest.fixture
def make_frame() -> Callable[..., Frame]:
    def factory(
        width: int = 8,
        height: int = 6,
        fill: tuple[int, int, int] = (0, 0, 0),
        frame_id: int = 0,
        timestamp_ms: int = 0,
    ) -> Frame:
        pixels = np.empty((height, width, 3), dtype=np.uint8)
        pixels[...] = fill
        return Frame(pixels=pixels, frame_id=frame_id, timestamp_ms=timestamp_ms)

    return factory


@pytest.fixture
def make_event() -> Callable[..., EruptionEvent]:
    def factory(
        event_id: int = 1,
        directions: tuple[Direction, ...] = (Direction.SW,),
        severity: Severity = Severity.WARNING,
        area: int = 400,
        timestamp_ms: int = 1_439_553_600_000,
        frame_id: int = 12,
    ) -> EruptionEvent:
        flows = tuple(
            (
                FlowBlob(
                    label=i + 1,
                    area=area,
                    centroid=(10.0 + i, 20.5),
                    perimeter=40,
                    bbox=(0, 0, 9, 9),
                    principal_angle=45.0,
                    eigenvalue_ratio=4.0,
                ),
                FlowTrajectory(
                    grados=135.0,
                    direction=direction,
                    displayed_deviation=90.0,
                    source=TrajectorySource.PCA,
                ),
            )
            for i, direction in enumerate(directions)
        )
        return EruptionEvent(
            event_id=event_id,
            timestamp_ms=timestamp_ms,
            frame_id=frame_id,
            flows=flows,
            severity=severity,
        )

    return factory


@pytest.fixture(scope="session")
def monitor_password_hash() -> str:
    return hash_password(MONITOR_PASSWORD, salt=b"0123456789abcdef", iterations=1_000)


@pytest.fixture
def monitor_config(monitor_password_hash: str) -> MonitorConfig:
    return MonitorConfig(
        bind_host="127.0.0.1",
        bind_port=8080,
        username="observer",
        password_hash=monitor_password_hash,
        page_title="Volcan monitor",
        max_event_history=3,
    )
