from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import replace

import cv2
import numpy as np
import numpy.typing as npt

from lavawatch.core.detect import morph_ops
from lavawatch.core.errors import EmptyBlob
from lavawatch.core.imaging import hsv_gate
from lavawatch.core.interfaces import BinaryMask, DetectParams, FlowBlob, Frame

LabelImage = npt.NDArray[np.int32]

# Eigenvalues closer than this (relative to the larger) count as isotropic.
ISOTROPY_TOLERANCE = 1e-9
# Search window around a perturbation when looking for the hot body it belongs to.
BODY_MARGIN_PX = 96


def label_components(
    mask: BinaryMask,
    connectivity: int = 8,
) -> tuple[LabelImage, list[FlowBlob]]:
    """Label connected regions in raster order of their first pixel.

    Returns the label image (0 = background) and one FlowBlob per label without
    principal-axis fields; see ``describe_blobs`` for those.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    mask = np.asarray(mask, dtype=bool)
    src = np.ascontiguousarray(mask, dtype=np.uint8)
    count, raw_labels, stats, centroids = cv2.connectedComponentsWithStats(
        src,
        connectivity=connectivity,
        ltype=cv2.CV_32S,
    )
    if count <= 1:
        return np.zeros(mask.shape, dtype=np.int32), []

    # OpenCV's block-based scan does not promise raster numbering; renumber by first pixel,
    # which lies in the top row of the bounding box.
    first_pixel: list[tuple[int, int, int]] = []
    for raw in range(1, count):
        left, top, box_w = (int(v) for v in stats[raw, :3])
        row = raw_labels[top, left : left + box_w]
        first_pixel.append((top, left + int(np.argmax(row == raw)), raw))
    first_pixel.sort()
    lut = np.zeros(count, dtype=np.int32)
    for new_label, (_, _, raw) in enumerate(first_pixel, start=1):
        lut[raw] = new_label
    labels = lut[raw_labels]

    blobs: list[FlowBlob] = []
    for new_label, (_, _, raw) in enumerate(first_pixel, start=1):
        left, top, box_w, box_h, area = (int(v) for v in stats[raw])
        inside = raw_labels[top : top + box_h, left : left + box_w] == raw
        blobs.append(
            FlowBlob(
                label=new_label,
                area=area,
                centroid=(float(centroids[raw, 0]), float(centroids[raw, 1])),
                perimeter=int(np.count_nonzero(_boundary_pixels(inside))),
                bbox=(left, top, left + box_w - 1, top + box_h - 1),
            ),
        )
    return labels, blobs


def connected_components(mask: BinaryMask, connectivity: int = 8) -> list[FlowBlob]:
    return label_components(mask, connectivity)[1]


def pca_axis(pixels: Iterable[tuple[float, float]] | npt.ArrayLike) -> tuple[float, float]:
    """Principal-axis angle in degrees [0, 180) (raster y-down) and the eigenvalue ratio.

    Isotropic blobs, single pixels included, return (0.0, 1.0). Collinear blobs
    have an infinite ratio.
    """
    points = np.asarray(pixels if isinstance(pixels, np.ndarray) else list(pixels), dtype=float)
    if points.size == 0:
        raise EmptyBlob("pca_axis needs at least one pixel")
    points = points.reshape(-1, 2)
    centered = points - points.mean(axis=0)
    covariance = centered.T @ centered / points.shape[0]
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    minor, major = float(eigenvalues[0]), float(eigenvalues[1])
    if major - minor <= ISOTROPY_TOLERANCE * max(major, 1.0):
        return 0.0, 1.0
    vx, vy = eigenvectors[:, 1]
    angle = math.degrees(math.atan2(vy, vx)) % 180.0
    if angle >= 180.0 - 1e-9:
        angle = 0.0
    ratio = math.inf if minor <= ISOTROPY_TOLERANCE * major else major / minor
    return angle, ratio


def blob_pixels(labels: LabelImage, label: int) -> npt.NDArray[np.int64]:
    ys, xs = np.nonzero(labels == label)
    return np.column_stack((xs, ys))


def describe_blobs(labels: LabelImage, blobs: Sequence[FlowBlob]) -> list[FlowBlob]:
    described: list[FlowBlob] = []
    for blob in blobs:
        left, top, right, bottom = blob.bbox
        ys, xs = np.nonzero(labels[top : bottom + 1, left : right + 1] == blob.label)
        angle, ratio = pca_axis(np.column_stack((xs + left, ys + top)))
        described.append(replace(blob, principal_angle=angle, eigenvalue_ratio=ratio))
    return described


def filter_blobs(blobs: Sequence[FlowBlob], min_area: int) -> list[FlowBlob]:
    return [blob for blob in blobs if blob.area >= min_area]


def flow_bodies(
    frame: Frame,
    labels: LabelImage,
    blobs: Sequence[FlowBlob],
    params: DetectParams,
    margin: int = BODY_MARGIN_PX,
) -> dict[int, FlowBlob]:
    """Hot-colored region of ``frame`` under each perturbation blob, keyed by blob label.

    Bodies are searched within ``margin`` pixels of the blobs; a longer body is cut at
    that window. Blobs with no hot pixel underneath get no entry.
    """
    bodies: dict[int, FlowBlob] = {}
    for (left, top, right, bottom), members in _body_windows(blobs, frame, margin):
        window = frame.pixels[top : bottom + 1, left : right + 1]
        hot = morph_ops(hsv_gate(window, params.hsv_range), params)
        hot_labels, hot_blobs = label_components(hot, params.connectivity)
        if not hot_blobs:
            continue
        blob_labels = labels[top : bottom + 1, left : right + 1]
        described: dict[int, FlowBlob] = {}
        for blob in members:
            under = hot_labels[blob_labels == blob.label]
            under = under[under > 0]
            if under.size == 0:
                continue
            best = int(np.bincount(under).argmax())
            if best not in described:
                body = describe_blobs(hot_labels, [hot_blobs[best - 1]])[0]
                cx, cy = body.centroid
                bx0, by0, bx1, by1 = body.bbox
                described[best] = replace(
                    body,
                    centroid=(cx + left, cy + top),
                    bbox=(bx0 + left, by0 + top, bx1 + left, by1 + top),
                )
            bodies[blob.label] = described[best]
    return bodies


def _body_windows(
    blobs: Sequence[FlowBlob],
    frame: Frame,
    margin: int,
) -> list[tuple[tuple[int, int, int, int], list[FlowBlob]]]:
    # Overlapping search windows merge so each hot region is labelled once.
    windows: list[tuple[tuple[int, int, int, int], list[FlowBlob]]] = []
    for blob in blobs:
        left, top, right, bottom = blob.bbox
        box = (
            max(0, left - margin),
            max(0, top - margin),
            min(frame.width - 1, right + margin),
            min(frame.height - 1, bottom + margin),
        )
        members = [blob]
        merged = True
        while merged:
            merged = False
            for index, (other, other_members) in enumerate(windows):
                if _overlaps(box, other):
                    box = (
                        min(box[0], other[0]),
                        min(box[1], other[1]),
                        max(box[2], other[2]),
                        max(box[3], other[3]),
                    )
                    members.extend(other_members)
                    del windows[index]
                    merged = True
                    break
        windows.append((box, members))
    return windows


def _overlaps(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> bool:
    return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]


def _boundary_pixels(mask: BinaryMask) -> BinaryMask:
    # A set pixel is interior when all four 4-neighbours are set; the image edge counts as unset.
    padded = np.pad(mask, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return mask & ~interior
