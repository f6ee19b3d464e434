from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import NamedTuple, Protocol, TypeAlias

import numpy as np
import numpy.typing as npt

# Row-major (height, width) rasters. Masks are bool, difference maps are uint8.
BinaryMask: TypeAlias = npt.NDArray[np.bool_]
DiffMap: TypeAlias = npt.NDArray[np.uint8]


@dataclass(frozen=True, eq=False)
class Frame:
    """Decoded 8-bit RGB raster; ``pixels`` has shape (height, width, 3)."""

    pixels: npt.NDArray[np.uint8]
    frame_id: int = 0
    timestamp_ms: int = 0

    def __post_init__(self) -> None:
        pixels = self.pixels
        if pixels.dtype != np.uint8 or pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError("frame pixels must be a uint8 array of shape (height, width, 3)")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError("frame must be at least 1x1")
        pixels.setflags(write=False)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class SkippedFrame:
    frame_id: int
    reason: str


class HsvPixel(NamedTuple):
    h: float
    s: float
    v: float


@dataclass(frozen=True)
class HsvRange:
    """Inclusive HSV box; ``h_lo > h_hi`` wraps through 0 and ``h_hi=360`` closes the circle."""

    h_lo: float = 139.0
    h_hi: float = 202.0
    s_lo: float = 0.2
    s_hi: float = 1.0
    v_lo: float = 0.3
    v_hi: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.h_lo < 360.0 or not 0.0 <= self.h_hi <= 360.0:
            raise ValueError("hue bounds must lie in [0, 360)")
        if not 0.0 <= self.s_lo <= self.s_hi <= 1.0:
            raise ValueError("saturation bounds must satisfy 0 <= s_lo <= s_hi <= 1")
        if not 0.0 <= self.v_lo <= self.v_hi <= 1.0:
            raise ValueError("value bounds must satisfy 0 <= v_lo <= v_hi <= 1")

    @property
    def wraps(self) -> bool:
        return self.h_lo > self.h_hi

    def contains(self, pixel: HsvPixel) -> bool:
        h, s, v = pixel
        if self.wraps:
            hue_ok = h >= self.h_lo or h <= self.h_hi
        else:
            hue_ok = self.h_lo <= h <= self.h_hi
        return hue_ok and self.s_lo <= s <= self.s_hi and self.v_lo <= v <= self.v_hi


@dataclass(frozen=True)
class StructuringElement:
    """Rectangular kernel of ``w`` x ``h`` pixels anchored at (w // 2, h // 2)."""

    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise ValueError("structuring element must be at least 1x1")

    @property
    def anchor(self) -> tuple[int, int]:
        return self.w // 2, self.h // 2


class GateMode(StrEnum):
    AND = "and"
    DIFF_ONLY = "diff_only"


@dataclass(frozen=True)
class DetectParams:
    diff_threshold: int = 30
    erode_kernel: StructuringElement = field(default_factory=lambda: StructuringElement(2, 1))
    dilate_kernel: StructuringElement = field(default_factory=lambda: StructuringElement(4, 2))
    hsv_range: HsvRange = field(default_factory=HsvRange)
    min_blob_area: int = 20
    morph_passes: int = 2
    gate_mode: GateMode = GateMode.AND
    connectivity: int = 8

    def __post_init__(self) -> None:
        if not 0 <= self.diff_threshold <= 255:
            raise ValueError("diff_threshold must be in [0, 255]")
        if self.min_blob_area < 1:
            raise ValueError("min_blob_area must be >= 1")
        if self.morph_passes < 0:
            raise ValueError("morph_passes must be >= 0")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")


@dataclass(frozen=True)
class FlowBlob:
    label: int
    area: int
    centroid: tuple[float, float]
    perimeter: int
    bbox: tuple[int, int, int, int]
    principal_angle: float = 0.0
    eigenvalue_ratio: float = 1.0

    @property
    def is_degenerate(self) -> bool:
        return self.eigenvalue_ratio <= 1.0


@dataclass(frozen=True)
class HoughParams:
    theta_bins: int = 180
    rho_resolution: float = 1.0
    vote_threshold: int = 20
    max_lines: int = 5

    def __post_init__(self) -> None:
        if self.theta_bins < 2:
            raise ValueError("theta_bins must be >= 2")
        if self.rho_resolution <= 0:
            raise ValueError("rho_resolution must be > 0")
        if self.vote_threshold < 1:
            raise ValueError("vote_threshold must be >= 1")
        if self.max_lines < 1:
            raise ValueError("max_lines must be >= 1")


@dataclass(frozen=True)
class HoughLine:
    r: float
    theta: float
    votes: int


@dataclass(frozen=True)
class VerticalLine:
    x: float


class Direction(StrEnum):
    NE = "NE"
    NW = "NW"
    SW = "SW"
    SE = "SE"
    INDETERMINATE = "Indeterminate"


class TrajectorySource(StrEnum):
    PCA = "pca"
    HOUGH = "hough"
    FUSED = "fused"
    MOTION = "motion"


@dataclass(frozen=True)
class FlowTrajectory:
    grados: float
    direction: Direction
    displayed_deviation: float
    source: TrajectorySource

    @classmethod
    def indeterminate(cls) -> FlowTrajectory:
        return cls(
            grados=0.0,
            direction=Direction.INDETERMINATE,
            displayed_deviation=0.0,
            source=TrajectorySource.PCA,
        )


class Severity(StrEnum):
    WATCH = "Watch"
    WARNING = "Warning"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class EruptionEvent:
    event_id: int
    timestamp_ms: int
    frame_id: int
    flows: tuple[tuple[FlowBlob, FlowTrajectory], ...]
    severity: Severity
    snapshot_path: str | None = None

    @property
    def total_area(self) -> int:
        return sum(blob.area for blob, _ in self.flows)


class SinkKind(StrEnum):
    WEBHOOK = "webhook"
    SMS = "sms"
    SERIAL = "serial"


@dataclass(frozen=True)
class SinkConfig:
    name: str
    kind: SinkKind
    url: str | None = None
    to: str | None = None
    path: str | None = None
    tcp: str | None = None


@dataclass(frozen=True)
class SinkOutcome:
    name: str
    kind: SinkKind
    delivered: bool
    attempts: int
    error: str | None = None


@dataclass(frozen=True)
class DeliveryReport:
    event_id: int
    outcomes: tuple[SinkOutcome, ...] = ()

    @property
    def all_delivered(self) -> bool:
        return all(outcome.delivered for outcome in self.outcomes)

    @property
    def failed(self) -> tuple[str, ...]:
        return tuple(outcome.name for outcome in self.outcomes if not outcome.delivered)


class AlertSink(Protocol):
    name: str
    kind: SinkKind

    async def deliver(self, event: EruptionEvent) -> None:
        raise NotImplementedError


@dataclass(frozen=True)
class MonitorConfig:
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080
    username: str = "admin"
    password_hash: str = ""
    page_title: str = "lavawatch"
    max_event_history: int = 256
    enabled: bool = False

    def __post_init__(self) -> None:
        if not 1 <= self.bind_port <= 65535:
            raise ValueError("bind_port must be in 1-65535")
        if self.max_event_history < 1:
            raise ValueError("max_event_history must be >= 1")


class PipelineState(StrEnum):
    IDLE = "Idle"
    RUNNING = "Running"
    DEGRADED = "Degraded"


@dataclass(frozen=True)
class EventSummary:
    event_id: int
    frame_id: int
    timestamp_ms: int
    severity: Severity
    flows: int
    total_area: int


@dataclass(frozen=True)
class StatusSnapshot:
    uptime_s: float = 0.0
    frames_processed: int = 0
    events_total: int = 0
    last_event: EventSummary | None = None
    current_fps: float = 0.0
    pipeline_state: PipelineState = PipelineState.IDLE


def finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None
