"""Synthetic eruption scenarios and the detection-rate benchmark run over them."""

from __future__ import annotations

import json
import logging
import math
import time
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import cv2
import numpy as np
import numpy.typing as npt

from lavawatch.core.config import bool_value, float_value, int_value, parse_key_values
from lavawatch.core.errors import ConfigError, FlowOutOfBounds
from lavawatch.core.imaging import hsv_to_rgb
from lavawatch.core.interfaces import DetectParams, Frame, HoughParams, HsvPixel
from lavawatch.core.pipeline import EventStage
from lavawatch.core.trajectory import classify_direction

LOG = logging.getLogger(__name__)

SCENARIO_SUFFIX = ".scenario"
DEFAULT_FLOW_COLOR = HsvPixel(170.0, 0.8, 0.9)
DEFAULT_FRAME_INTERVAL_MS = 100
# cv2.line takes fixed-point coordinates with this many fractional bits.
_SUBPIXEL_SHIFT = 4
_SUBPIXEL_SCALE = 1 << _SUBPIXEL_SHIFT
_DEFAULT_BEARINGS = (30.0, 60.0, 120.0, 150.0, 210.0, 240.0, 300.0, 330.0)


@dataclass(frozen=True)
class FlowSpec:
    """A bright streak whose tail advances at ``speed`` and head at ``speed + growth``.

    ``bearing`` is in degrees counter-clockwise from screen-right, so the unit step
    in raster coordinates is (cos b, -sin b). The streak appears at frame ``onset``.
    """

    start: tuple[float, float]
    bearing: float
    speed: float
    width: int = 8
    length: float = 10.0
    growth: float = 0.0
    onset: int = 0
    color: HsvPixel = DEFAULT_FLOW_COLOR

    def __post_init__(self) -> None:
        if self.speed < 0 or self.growth < 0 or self.length < 0:
            raise ValueError("flow speed, growth and length must be >= 0")
        if self.width < 1:
            raise ValueError("flow width must be >= 1")
        if self.onset < 0:
            raise ValueError("flow onset must be >= 0")

    @property
    def step(self) -> tuple[float, float]:
        rad = math.radians(self.bearing)
        return math.cos(rad), -math.sin(rad)

    def endpoints(self, frame_index: int) -> tuple[tuple[float, float], tuple[float, float]]:
        age = frame_index - self.onset
        dx, dy = self.step
        tail = self.speed * age
        head = self.length + (self.speed + self.growth) * age
        x0, y0 = self.start
        return (x0 + tail * dx, y0 + tail * dy), (x0 + head * dx, y0 + head * dy)


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    frames: int = 16
    size: tuple[int, int] = (320, 240)
    background_low: int = 40
    background_high: int = 120
    noise_sigma: float = 0.0
    flow: FlowSpec | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.frames < 2:
            raise ValueError("scenario needs at least 2 frames")
        if self.size[0] < 1 or self.size[1] < 1:
            raise ValueError("scenario size must be at least 1x1")
        if not 0 <= self.background_low <= self.background_high <= 255:
            raise ValueError("background must satisfy 0 <= low <= high <= 255")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.flow is not None and self.flow.onset >= self.frames:
            raise ValueError("flow onset must fall inside the sequence")

    @property
    def has_flow(self) -> bool:
        return self.flow is not None

    def active_pairs(self) -> range:
        """Indices k whose pair (k - 1, k) shows an active flow."""
        if self.flow is None:
            return range(0)
        return range(max(self.flow.onset, 1), self.frames)


def generate_sequence(
    scenario: Scenario,
    frame_interval_ms: int = DEFAULT_FRAME_INTERVAL_MS,
) -> list[Frame]:
    width, height = scenario.size
    if scenario.flow is not None:
        _check_bounds(scenario, scenario.flow)
    rng = np.random.default_rng(scenario.seed)
    background = render_background(
        width,
        height,
        scenario.background_low,
        scenario.background_high,
    )
    color = np.array(
        hsv_to_rgb(scenario.flow.color if scenario.flow else DEFAULT_FLOW_COLOR),
        dtype=np.float64,
    )
    frames: list[Frame] = []
    for k in range(scenario.frames):
        canvas = background.copy()
        if scenario.flow is not None and k >= scenario.flow.onset:
            alpha = streak_coverage(scenario.flow, k, width, height)[..., None]
            canvas = canvas * (1.0 - alpha) + color * alpha
        if scenario.noise_sigma > 0:
            canvas = canvas + rng.normal(0.0, scenario.noise_sigma, canvas.shape)
        pixels = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
        frames.append(Frame(pixels=pixels, frame_id=k, timestamp_ms=k * frame_interval_ms))
    return frames


def render_background(width: int, height: int, low: int, high: int) -> npt.NDArray[np.float64]:
    ramp = np.linspace(float(low), float(high), width, dtype=np.float64)
    return np.broadcast_to(ramp[None, :, None], (height, width, 3)).copy()


def streak_coverage(flow: FlowSpec, frame_index: int, width: int, height: int) -> np.ndarray:
    canvas = np.zeros((height, width), dtype=np.uint8)
    tail, head = flow.endpoints(frame_index)
    cv2.line(
        canvas,
        _fixed_point(tail),
        _fixed_point(head),
        255,
        thickness=flow.width,
        lineType=cv2.LINE_AA,
        shift=_SUBPIXEL_SHIFT,
    )
    return canvas.astype(np.float64) / 255.0


def _fixed_point(point: tuple[float, float]) -> tuple[int, int]:
    return int(round(point[0] * _SUBPIXEL_SCALE)), int(round(point[1] * _SUBPIXEL_SCALE))


def _check_bounds(scenario: Scenario, flow: FlowSpec) -> None:
    width, height = scenario.size
    margin = flow.width / 2.0
    last = scenario.frames - 1
    for label, (x, y) in (("start", flow.start), ("head", flow.endpoints(last)[1])):
        if not (margin <= x <= width - 1 - margin and margin <= y <= height - 1 - margin):
            raise FlowOutOfBounds(
                f"scenario {scenario.scenario_id}: flow {label} ({x:.1f}, {y:.1f}) "
                f"leaves the {width}x{height} frame by frame {last}",
            )


def default_scenarios() -> list[Scenario]:
    """50 flow scenarios (speed 1-4, noise 0-2) and 50 still ones at 320x240."""
    scenarios: list[Scenario] = []
    for i in range(50):
        bearing = _DEFAULT_BEARINGS[i % len(_DEFAULT_BEARINGS)] + 3.0 * (i // 8) - 9.0
        flow = FlowSpec(
            start=(160.0, 120.0),
            bearing=bearing,
            speed=float(1 + (i + i // 8) % 4),
            width=8,
            length=10.0,
            growth=3.0,
        )
        scenarios.append(
            Scenario(f"flow-{i + 1:03d}", noise_sigma=float(i % 3), flow=flow, seed=1000 + i),
        )
    for i in range(50):
        scenarios.append(Scenario(f"still-{i + 1:03d}", noise_sigma=float(i % 3), seed=2000 + i))
    return scenarios


def render_scenario(scenario: Scenario) -> str:
    width, height = scenario.size
    lines = [
        f"id = {scenario.scenario_id}",
        f"frames = {scenario.frames}",
        f"width = {width}",
        f"height = {height}",
        f"seed = {scenario.seed}",
        f"background.low = {scenario.background_low}",
        f"background.high = {scenario.background_high}",
        f"noise_sigma = {scenario.noise_sigma:g}",
        f"flow = {'true' if scenario.flow else 'false'}",
    ]
    if scenario.flow is not None:
        flow = scenario.flow
        lines += [
            f"flow.start_x = {flow.start[0]:g}",
            f"flow.start_y = {flow.start[1]:g}",
            f"flow.bearing = {flow.bearing:g}",
            f"flow.speed = {flow.speed:g}",
            f"flow.width = {flow.width}",
            f"flow.length = {flow.length:g}",
            f"flow.growth = {flow.growth:g}",
            f"flow.onset = {flow.onset}",
            f"flow.h = {flow.color.h:g}",
            f"flow.s = {flow.color.s:g}",
            f"flow.v = {flow.color.v:g}",
        ]
    return "\n".join(lines) + "\n"


_SCENARIO_DEFAULTS = {
    "frames": "16",
    "width": "320",
    "height": "240",
    "seed": "0",
    "background.low": "40",
    "background.high": "120",
    "noise_sigma": "0",
    "flow": "false",
    "flow.start_x": "160",
    "flow.start_y": "120",
    "flow.bearing": "270",
    "flow.speed": "2",
    "flow.width": "8",
    "flow.length": "10",
    "flow.growth": "0",
    "flow.onset": "0",
    "flow.h": str(DEFAULT_FLOW_COLOR.h),
    "flow.s": str(DEFAULT_FLOW_COLOR.s),
    "flow.v": str(DEFAULT_FLOW_COLOR.v),
}


def parse_scenario(text: str, default_id: str = "scenario") -> Scenario:
    values: Mapping[str, str] = {**_SCENARIO_DEFAULTS, **parse_key_values(text)}
    unknown = set(values) - set(_SCENARIO_DEFAULTS) - {"id"}
    if unknown:
        raise ConfigError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    flow = None
    try:
        if bool_value(values, "flow"):
            flow = FlowSpec(
                start=(
                    float_value(values, "flow.start_x", minimum=0.0),
                    float_value(values, "flow.start_y", minimum=0.0),
                ),
                bearing=float_value(values, "flow.bearing", minimum=-360.0) % 360.0,
                speed=float_value(values, "flow.speed", minimum=0.0),
                width=int_value(values, "flow.width", minimum=1),
                length=float_value(values, "flow.length", minimum=0.0),
                growth=float_value(values, "flow.growth", minimum=0.0),
                onset=int_value(values, "flow.onset", minimum=0),
                color=HsvPixel(
                    float_value(values, "flow.h", minimum=0.0) % 360.0,
                    float_value(values, "flow.s", minimum=0.0),
                    float_value(values, "flow.v", minimum=0.0),
                ),
            )
        return Scenario(
            scenario_id=values.get("id", default_id).strip() or default_id,
            frames=int_value(values, "frames", minimum=2),
            size=(int_value(values, "width", minimum=1), int_value(values, "height", minimum=1)),
            background_low=int_value(values, "background.low", minimum=0, maximum=255),
            background_high=int_value(values, "background.high", minimum=0, maximum=255),
            noise_sigma=float_value(values, "noise_sigma", minimum=0.0),
            flow=flow,
            seed=int_value(values, "seed", minimum=0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenarios(scenario_dir: str | Path) -> list[Scenario]:
    root = Path(scenario_dir)
    if not root.is_dir():
        raise ConfigError(f"scenario directory does not exist: {root}")
    scenarios = []
    for path in sorted(root.glob(f"*{SCENARIO_SUFFIX}")):
        try:
            scenarios.append(parse_scenario(path.read_text(encoding="utf-8"), path.stem))
        except ConfigError as exc:
            raise ConfigError(f"{path.name}: {exc}") from exc
    return scenarios


def write_scenarios(scenarios: Iterable[Scenario], out_dir: str | Path) -> list[Path]:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for scenario in scenarios:
        path = root / f"{scenario.scenario_id}{SCENARIO_SUFFIX}"
        path.write_text(render_scenario(scenario), encoding="utf-8")
        written.append(path)
    return written


@dataclass(frozen=True)
class BenchmarkRow:
    scenario_id: str
    eruption: bool
    detected: bool
    detection_pct: float
    events: int = 0
    false_events: int = 0
    mean_area: float = 0.0
    mean_perimeter: float = 0.0
    expected_direction: str | None = None
    dominant_direction: str | None = None
    error: str | None = None


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple[BenchmarkRow, ...]
    success_pct: float
    error_pct: float
    false_events: int = 0
    elapsed_s: float = field(default=0.0, compare=False)


def summarize_detection_column(percentages: Sequence[float]) -> tuple[float, float]:
    """Mean detection percentage and its complement, both rounded to 2 decimals."""
    if not percentages:
        return 100.0, 0.0
    success = round(sum(percentages) / len(percentages), 2)
    return success, round(100.0 - success, 2)


def evaluate_scenario(
    scenario: Scenario,
    params: DetectParams | None = None,
    hough: HoughParams | None = None,
) -> BenchmarkRow:
    try:
        frames = generate_sequence(scenario)
    except FlowOutOfBounds as exc:
        LOG.warning("scenario rejected scenario_id=%s error=%s", scenario.scenario_id, exc)
        return BenchmarkRow(
            scenario_id=scenario.scenario_id,
            eruption=scenario.has_flow,
            detected=False,
            detection_pct=0.0,
            error=str(exc),
        )
    stage = EventStage(params, hough)
    active = set(scenario.active_pairs())
    events = 0
    false_events = 0
    areas: list[int] = []
    perimeters: list[int] = []
    directions: Counter[str] = Counter()
    for k in range(1, len(frames)):
        event = stage.step(frames[k - 1], frames[k])
        if event is None:
            continue
        flows = event.flows
        if k in active:
            events += 1
            areas.extend(blob.area for blob, _ in flows)
            perimeters.extend(blob.perimeter for blob, _ in flows)
            directions.update(trajectory.direction.value for _, trajectory in flows)
        else:
            false_events += 1

    pairs = len(frames) - 1
    if scenario.flow is not None:
        detection_pct = 100.0 * events / len(active) if active else 0.0
        detected = events > 0
        expected = classify_direction(scenario.flow.bearing % 360.0)[0].value
    else:
        detection_pct = 100.0 * (pairs - false_events) / pairs
        detected = false_events == 0
        expected = None
    return BenchmarkRow(
        scenario_id=scenario.scenario_id,
        eruption=scenario.has_flow,
        detected=detected,
        detection_pct=detection_pct,
        events=events,
        false_events=false_events,
        mean_area=float(np.mean(areas)) if areas else 0.0,
        mean_perimeter=float(np.mean(perimeters)) if perimeters else 0.0,
        expected_direction=expected,
        dominant_direction=directions.most_common(1)[0][0] if directions else None,
    )


def run_benchmark(
    scenarios: Sequence[Scenario],
    params: DetectParams | None = None,
    hough: HoughParams | None = None,
    workers: int = 1,
) -> BenchmarkReport:
    started = time.perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="bench") as pool:
            rows = list(pool.map(lambda s: evaluate_scenario(s, params, hough), scenarios))
    else:
        rows = [evaluate_scenario(s, params, hough) for s in scenarios]
    scored = [row.detection_pct for row in rows if row.error is None]
    success, error = summarize_detection_column(scored)
    report = BenchmarkReport(
        rows=tuple(rows),
        success_pct=success,
        error_pct=error,
        false_events=sum(row.false_events for row in rows),
        elapsed_s=time.perf_counter() - started,
    )
    LOG.info(
        "benchmark finished scenarios=%s success_pct=%.2f false_events=%s elapsed_s=%.2f",
        len(rows),
        report.success_pct,
        report.false_events,
        report.elapsed_s,
    )
    return report


def render_report_text(report: BenchmarkReport) -> str:
    header = (
        f"{'TEST':<16}{'ERUPTION':<10}{'DETECTED':<10}{'DETECTION':>10}"
        f"{'EVENTS':>8}{'FALSE':>7}{'AREA':>9}{'PERIM':>8}  DIR"
    )
    lines = [header, "-" * len(header)]
    for row in report.rows:
        if row.error is not None:
            lines.append(f"{row.scenario_id:<16}{_yes_no(row.eruption):<10}ERROR  {row.error}")
            continue
        direction = row.dominant_direction or "-"
        if row.expected_direction is not None:
            direction = f"{direction} (expected {row.expected_direction})"
        lines.append(
            f"{row.scenario_id:<16}{_yes_no(row.eruption):<10}{_yes_no(row.detected):<10}"
            f"{row.detection_pct:>9.2f}%{row.events:>8}{row.false_events:>7}"
            f"{row.mean_area:>9.1f}{row.mean_perimeter:>8.1f}  {direction}",
        )
    lines.append("-" * len(header))
    lines.append(
        f"Result  Succ {report.success_pct:.2f}%  Err {report.error_pct:.2f}%  "
        f"false events {report.false_events}",
    )
    return "\n".join(lines) + "\n"


def report_to_json(report: BenchmarkReport) -> str:
    payload = {
        "scenarios": len(report.rows),
        "success_pct": report.success_pct,
        "error_pct": report.error_pct,
        "false_events": report.false_events,
        "elapsed_s": round(report.elapsed_s, 3),
        "rows": [
            {**asdict(row), "detection_pct": round(row.detection_pct, 2)} for row in report.rows
        ],
    }
    return json.dumps(payload, indent=2)


def _yes_no(value: bool) -> str:
    return "yes" if value else "no"
