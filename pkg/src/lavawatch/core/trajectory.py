from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from functools import lru_cache

import numpy as np
import numpy.typing as npt

from lavawatch.core.errors import IndeterminateTrajectory, ZeroDisplacement
from lavawatch.core.interfaces import (
    BinaryMask,
    Direction,
    FlowBlob,
    FlowTrajectory,
    HoughLine,
    HoughParams,
    TrajectorySource,
    VerticalLine,
)

SIN_TOLERANCE = 1e-9
AXIS_AGREEMENT_DEG = 10.0
MIN_MOTION_PX = 1.0
# Flow bodies rounder than this give no usable axis.
BODY_MIN_RATIO = 2.0
HEADING_TOLERANCE_DEG = 60.0
_VOTE_CHUNK = 16384
_NEIGHBOURS = tuple((dt, dr) for dt in (-1, 0, 1) for dr in (-1, 0, 1) if (dt, dr) != (0, 0))


@lru_cache(maxsize=8)
def theta_table(theta_bins: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    thetas = np.arange(theta_bins, dtype=np.float64) * (math.pi / theta_bins)
    cos, sin = np.cos(thetas), np.sin(thetas)
    for array in (thetas, cos, sin):
        array.setflags(write=False)
    return thetas, cos, sin


def rho_offset(height: int, width: int, rho_resolution: float) -> int:
    return int(math.ceil(math.hypot(height, width) / rho_resolution)) + 1


def hough_accumulator(
    mask: BinaryMask,
    params: HoughParams,
) -> tuple[npt.NDArray[np.int64], int]:
    """Integer vote array of shape (theta_bins, 2 * offset + 1) plus the rho index offset.

    Pixel (x, y) votes in bin k for rho index floor(r / rho_resolution + 0.5) + offset
    where r = x*cos(theta_k) + y*sin(theta_k).
    """
    height, width = mask.shape
    offset = rho_offset(height, width, params.rho_resolution)
    n_rho = 2 * offset + 1
    _, cos, sin = theta_table(params.theta_bins)
    base = np.arange(params.theta_bins, dtype=np.int64) * n_rho
    acc = np.zeros(params.theta_bins * n_rho, dtype=np.int64)
    ys, xs = np.nonzero(mask)
    for start in range(0, xs.size, _VOTE_CHUNK):
        x = xs[start : start + _VOTE_CHUNK].astype(np.float64)[:, None]
        y = ys[start : start + _VOTE_CHUNK].astype(np.float64)[:, None]
        r = x * cos[None, :] + y * sin[None, :]
        index = np.floor(r / params.rho_resolution + 0.5).astype(np.int64) + offset
        acc += np.bincount((index + base[None, :]).ravel(), minlength=acc.size)
    return acc.reshape(params.theta_bins, n_rho), offset


def hough_peaks(acc: npt.NDArray[np.int64], offset: int, params: HoughParams) -> list[HoughLine]:
    """Local maxima over the 8-neighbourhood; equal neighbours only lose to earlier (theta, r)."""
    padded = np.pad(acc, 1, constant_values=-1)
    n_theta, n_rho = acc.shape
    peak = acc >= params.vote_threshold
    for dt, dr in _NEIGHBOURS:
        neighbour = padded[1 + dt : 1 + dt + n_theta, 1 + dr : 1 + dr + n_rho]
        earlier = dt < 0 or (dt == 0 and dr < 0)
        peak &= (acc > neighbour) if earlier else (acc >= neighbour)
    t_idx, r_idx = np.nonzero(peak)
    if t_idx.size == 0:
        return []
    votes = acc[t_idx, r_idx]
    order = np.lexsort((r_idx, t_idx, -votes))[: params.max_lines]
    thetas, _, _ = theta_table(params.theta_bins)
    return [
        HoughLine(
            r=float((r_idx[i] - offset) * params.rho_resolution),
            theta=float(thetas[t_idx[i]]),
            votes=int(votes[i]),
        )
        for i in order
    ]


def hough_transform(mask: BinaryMask, params: HoughParams) -> list[HoughLine]:
    if not mask.any():
        return []
    acc, offset = hough_accumulator(mask, params)
    return hough_peaks(acc, offset, params)


def line_to_slope_form(line: HoughLine) -> tuple[float, float] | VerticalLine:
    """y = (-cos t / sin t) x + r / sin t, or a VerticalLine at x = r when sin t vanishes."""
    sin = math.sin(line.theta)
    if abs(sin) <= SIN_TOLERANCE:
        return VerticalLine(x=line.r)
    return -math.cos(line.theta) / sin, line.r / sin


def line_axis_angle(line: HoughLine) -> float:
    return (math.degrees(line.theta) + 90.0) % 180.0


def motion_angle(prev_centroid: tuple[float, float], curr_centroid: tuple[float, float]) -> float:
    """Bearing of the displacement in degrees [0, 360), counter-clockwise with 90 = screen-up."""
    dx = curr_centroid[0] - prev_centroid[0]
    dy = curr_centroid[1] - prev_centroid[1]
    if dx == 0 and dy == 0:
        raise ZeroDisplacement("centroids are identical")
    return _normalize_degrees(math.degrees(math.atan2(-dy, dx)))


def classify_direction(grados: float) -> tuple[Direction, float]:
    """Compass sector and displayed deviation.

    The SW branch reports |grados - 45| verbatim even though its sector centre is 135;
    the other sectors report the distance to their own centre.
    """
    if not 0.0 <= grados < 360.0:
        raise ValueError("grados must be in [0, 360)")
    if 90.0 < grados < 180.0:
        return Direction.SW, abs(grados - 45.0)
    if grados <= 90.0:
        return Direction.SE, abs(grados - 45.0)
    if grados <= 270.0:
        return Direction.NW, abs(grados - 225.0)
    return Direction.NE, abs(grados - 315.0)


def axis_to_grados(principal_angle: float) -> float:
    """Resolve a raster axis to its downslope half; horizontal axes resolve rightward."""
    # Raster angles in [0, 180) already point down (or right), so only the y flip remains.
    return _normalize_degrees(-principal_angle)


def axes_agree(a: float, b: float, tolerance: float = AXIS_AGREEMENT_DEG) -> bool:
    diff = abs(a - b) % 180.0
    return min(diff, 180.0 - diff) <= tolerance


def relevant_line(blob: FlowBlob, lines: Sequence[HoughLine]) -> HoughLine | None:
    """Strongest line passing within sqrt(area) pixels (at least 1) of the blob centroid."""
    cx, cy = blob.centroid
    reach = max(1.0, math.sqrt(blob.area))
    for line in lines:
        distance = abs(cx * math.cos(line.theta) + cy * math.sin(line.theta) - line.r)
        if distance <= reach:
            return line
    return None


def body_heading(
    blob: FlowBlob,
    body: FlowBlob | None,
    motion: float | None = None,
) -> float | None:
    """Grados along the flow body's principal axis, on the side the flow advances.

    The side comes from ``motion`` when given, else from where the perturbation sits
    relative to the body centroid. None when the body is not elongated or neither half
    of its axis lies within HEADING_TOLERANCE_DEG of the advance.
    """
    if body is None or body.eigenvalue_ratio < BODY_MIN_RATIO:
        return None
    if motion is None:
        dx = blob.centroid[0] - body.centroid[0]
        dy = blob.centroid[1] - body.centroid[1]
        if math.hypot(dx, dy) < MIN_MOTION_PX:
            return None
        motion = _normalize_degrees(math.degrees(math.atan2(-dy, dx)))
    forward = axis_to_grados(body.principal_angle)
    for candidate in (forward, _normalize_degrees(forward + 180.0)):
        if _angular_distance(candidate, motion) <= HEADING_TOLERANCE_DEG:
            return candidate
    return None


def estimate_trajectory(
    blob: FlowBlob,
    match: FlowBlob | None,
    lines: Sequence[HoughLine],
    body: FlowBlob | None = None,
) -> FlowTrajectory:
    line = relevant_line(blob, lines)
    hough_agrees = (
        line is not None
        and not blob.is_degenerate
        and axes_agree(line_axis_angle(line), blob.principal_angle)
    )
    motion = None
    if match is not None:
        dx = blob.centroid[0] - match.centroid[0]
        dy = blob.centroid[1] - match.centroid[1]
        if math.hypot(dx, dy) >= MIN_MOTION_PX:
            motion = motion_angle(match.centroid, blob.centroid)
    heading = body_heading(blob, body, motion)
    if heading is not None:
        return _trajectory(heading, TrajectorySource.FUSED)
    if motion is not None:
        source = TrajectorySource.FUSED if hough_agrees else TrajectorySource.MOTION
        return _trajectory(motion, source)
    if not blob.is_degenerate:
        source = TrajectorySource.FUSED if hough_agrees else TrajectorySource.PCA
        return _trajectory(axis_to_grados(blob.principal_angle), source)
    if match is not None and line is not None:
        return _trajectory(axis_to_grados(line_axis_angle(line)), TrajectorySource.HOUGH)
    raise IndeterminateTrajectory(f"blob label={blob.label} has no usable axis or motion")


def match_blobs(
    previous: Sequence[FlowBlob],
    current: Sequence[FlowBlob],
) -> dict[int, FlowBlob]:
    """Greedy nearest-centroid matching keyed by current label.

    A pair is eligible when the centroids lie within 2 * sqrt(larger area); closest
    pairs are taken first and each blob matches at most once.
    """
    candidates: list[tuple[float, int, int]] = []
    for ci, curr in enumerate(current):
        for pi, prev in enumerate(previous):
            distance = math.dist(curr.centroid, prev.centroid)
            if distance <= 2.0 * math.sqrt(max(curr.area, prev.area)):
                candidates.append((distance, ci, pi))
    candidates.sort()
    matched: dict[int, FlowBlob] = {}
    used_prev: set[int] = set()
    for _, ci, pi in candidates:
        label = current[ci].label
        if label in matched or pi in used_prev:
            continue
        matched[label] = previous[pi]
        used_prev.add(pi)
    return matched


class FlowTracker:
    def __init__(self) -> None:
        self._previous: list[FlowBlob] = []

    def reset(self) -> None:
        self._previous = []

    def step(
        self,
        blobs: Sequence[FlowBlob],
        lines: Sequence[HoughLine],
        bodies: Mapping[int, FlowBlob] | None = None,
    ) -> list[tuple[FlowBlob, FlowTrajectory]]:
        matches = match_blobs(self._previous, blobs)
        bodies = bodies or {}
        flows: list[tuple[FlowBlob, FlowTrajectory]] = []
        for blob in blobs:
            try:
                trajectory = estimate_trajectory(
                    blob,
                    matches.get(blob.label),
                    lines,
                    bodies.get(blob.label),
                )
            except IndeterminateTrajectory:
                trajectory = FlowTrajectory.indeterminate()
            flows.append((blob, trajectory))
        self._previous = list(blobs)
        return flows


def _trajectory(grados: float, source: TrajectorySource) -> FlowTrajectory:
    direction, deviation = classify_direction(grados)
    return FlowTrajectory(
        grados=grados,
        direction=direction,
        displayed_deviation=deviation,
        source=source,
    )


def _normalize_degrees(angle: float) -> float:
    angle %= 360.0
    return 0.0 if angle >= 360.0 else angle


def _angular_distance(a: float, b: float) -> float:
    diff = abs(a - b) % 360.0
    return min(diff, 360.0 - diff)
