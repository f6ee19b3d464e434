from __future__ import annotations

import cv2
import numpy as np

from lavawatch.core.errors import DimensionMismatch
from lavawatch.core.imaging import hsv_gate
from lavawatch.core.interfaces import (
    BinaryMask,
    DetectParams,
    DiffMap,
    Frame,
    GateMode,
    StructuringElement,
)


def abs_diff(prev: Frame, curr: Frame) -> DiffMap:
    """Per-pixel maximum over channels of |curr - prev|."""
    _require_same_shape(prev, curr)
    r, g, b = cv2.split(cv2.absdiff(prev.pixels, curr.pixels))
    return cv2.max(cv2.max(r, g), b)


def threshold_diff(diff: DiffMap, tau: int) -> BinaryMask:
    if not 0 <= tau <= 255:
        raise ValueError("tau must be in [0, 255]")
    return diff >= tau


def erode(mask: BinaryMask, kernel: StructuringElement) -> BinaryMask:
    return _erode_u8(_as_u8(mask), kernel).astype(bool)


def dilate(mask: BinaryMask, kernel: StructuringElement) -> BinaryMask:
    return _dilate_u8(_as_u8(mask), kernel).astype(bool)


def morph_ops(mask: BinaryMask, params: DetectParams) -> BinaryMask:
    out = _as_u8(mask)
    for _ in range(params.morph_passes):
        out = _erode_u8(out, params.erode_kernel)
    for _ in range(params.morph_passes):
        out = _dilate_u8(out, params.dilate_kernel)
    return out.astype(bool)


def detect_perturbation(prev: Frame, curr: Frame, params: DetectParams) -> BinaryMask:
    changed = threshold_diff(abs_diff(prev, curr), params.diff_threshold)
    if params.gate_mode == GateMode.AND:
        # Only changed pixels need the HSV conversion.
        rows, cols = np.nonzero(changed)
        if rows.size:
            changed[rows, cols] = hsv_gate(curr.pixels[rows, cols], params.hsv_range)
    return morph_ops(changed, params)


def _require_same_shape(prev: Frame, curr: Frame) -> None:
    if prev.pixels.shape != curr.pixels.shape:
        raise DimensionMismatch(
            f"frame sizes differ: {prev.width}x{prev.height} vs {curr.width}x{curr.height}",
        )


def _as_u8(mask: BinaryMask) -> np.ndarray:
    return np.ascontiguousarray(mask, dtype=np.uint8)


def _kernel_array(kernel: StructuringElement) -> np.ndarray:
    return np.ones((kernel.h, kernel.w), dtype=np.uint8)


def _erode_u8(mask: np.ndarray, kernel: StructuringElement) -> np.ndarray:
    # Out-of-bounds cells count as set (OpenCV's default erosion border).
    return cv2.erode(mask, _kernel_array(kernel), anchor=kernel.anchor)


def _dilate_u8(mask: np.ndarray, kernel: StructuringElement) -> np.ndarray:
    # OpenCV does not reflect the footprint; moving the anchor to the mirrored cell does.
    ax, ay = kernel.anchor
    reflected = (kernel.w - 1 - ax, kernel.h - 1 - ay)
    return cv2.dilate(mask, _kernel_array(kernel), anchor=reflected)
