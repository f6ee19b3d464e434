from __future__ import annotations

import math
from collections import deque

import numpy as np
import pytest

from lavawatch.core.blobs import (
    blob_pixels,
    connected_components,
    describe_blobs,
    filter_blobs,
    label_components,
    pca_axis,
)
from lavawatch.core.errors import EmptyBlob


def _flood_fill_reference(mask: np.ndarray, connectivity: int) -> list[dict]:
    h, w = mask.shape
    seen = np.zeros_like(mask)
    if connectivity == 8:
        steps = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    else:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    regions = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or seen[y, x]:
                continue
            pixels = []
            queue = deque([(y, x)])
            seen[y, x] = True
            while queue:
                cy, cx = queue.popleft()
                pixels.append((cy, cx))
                for dy, dx in steps:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            boundary = 0
            for py, px in pixels:
                for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    ny, nx = py + dy, px + dx
                    if not (0 <= ny < h and 0 <= nx < w) or not mask[ny, nx]:
                        boundary += 1
                        break
            ys = [p[0] for p in pixels]
            xs = [p[1] for p in pixels]
            regions.append(
                {
                    "area": len(pixels),
                    "centroid": (sum(xs) / len(xs), sum(ys) / len(ys)),
                    "perimeter": boundary,
                    "bbox": (min(xs), min(ys), max(xs), max(ys)),
                },
            )
    return regions


def test_empty_mask_has_no_blobs() -> None:
    labels, blobs = label_components(np.zeros((4, 4), dtype=bool))

    assert blobs == []
    assert not labels.any()


def test_solid_rectangle_measurements() -> None:
    mask = np.zeros((10, 12), dtype=bool)
    mask[2:6, 3:8] = True

    (blob,) = connected_components(mask)

    assert blob.label == 1
    assert blob.area == 20
    assert blob.centroid == pytest.approx((5.0, 3.5))
    assert blob.perimeter == 14
    assert blob.bbox == (3, 2, 7, 5)


def test_single_pixel_blob() -> None:
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True

    (blob,) = connected_components(mask)

    assert (blob.area, blob.perimeter) == (1, 1)


def test_diagonal_pixels_depend_on_connectivity() -> None:
    mask = np.eye(4, dtype=bool)

    assert len(connected_components(mask, 8)) == 1
    assert len(connected_components(mask, 4)) == 4
    with pytest.raises(ValueError):
        connected_components(mask, 6)


@pytest.mark.parametrize("connectivity", [4, 8])
def test_labeling_matches_flood_fill(connectivity: int) -> None:
    rng = np.random.default_rng(100 + connectivity)
    mask = rng.random((24, 31)) < 0.45

    labels, blobs = label_components(mask, connectivity)
    expected = _flood_fill_reference(mask, connectivity)

    assert len(blobs) == len(expected)
    assert [blob.label for blob in blobs] == list(range(1, len(blobs) + 1))
    assert sum(blob.area for blob in blobs) == int(mask.sum())
    assert np.array_equal(labels > 0, mask)
    for blob, region in zip(blobs, expected, strict=True):
        assert blob.area == region["area"]
        assert blob.centroid == pytest.approx(region["centroid"])
        assert blob.perimeter == region["perimeter"]
        assert blob.bbox == region["bbox"]
        assert 1 <= blob.perimeter <= blob.area


def test_pca_horizontal_and_vertical_lines() -> None:
    horizontal = [(x, 3) for x in range(10)]
    vertical = [(2, y) for y in range(10)]

    angle_h, ratio_h = pca_axis(horizontal)
    angle_v, ratio_v = pca_axis(vertical)

    assert angle_h == pytest.approx(0.0)
    assert math.isinf(ratio_h)
    assert angle_v == pytest.approx(90.0)
    assert math.isinf(ratio_v)


def test_pca_diagonal_points_down_right() -> None:
    angle, _ = pca_axis([(i, i) for i in range(8)])

    assert angle == pytest.approx(45.0)


def test_pca_elongated_blob_ratio() -> None:
    pixels = [(x, y) for x in range(12) for y in range(3)]

    angle, ratio = pca_axis(pixels)

    assert angle == pytest.approx(0.0, abs=1e-9)
    assert ratio == pytest.approx((143 / 12) / (8 / 12))


def test_pca_isotropic_and_single_pixel() -> None:
    square = [(x, y) for x in range(3) for y in range(3)]

    assert pca_axis(square) == (0.0, 1.0)
    assert pca_axis([(4, 4)]) == (0.0, 1.0)
    with pytest.raises(EmptyBlob):
        pca_axis([])


def test_describe_blobs_fills_axis() -> None:
    mask = np.zeros((12, 12), dtype=bool)
    mask[1, 1:9] = True
    for i in range(5):
        mask[5 + i, 2 + i] = True
        mask[5 + i, 3 + i] = True

    labels, blobs = label_components(mask)
    described = describe_blobs(labels, blobs)

    assert [blob.label for blob in described] == [1, 2]
    assert described[0].principal_angle == pytest.approx(0.0)
    assert described[1].principal_angle == pytest.approx(45.0, abs=5.0)
    assert not described[1].is_degenerate
    assert blob_pixels(labels, 1).tolist() == [[x, 1] for x in range(1, 9)]


def test_filter_blobs_keeps_threshold_area() -> None:
    mask = np.zeros((6, 10), dtype=bool)
    mask[0, 0:3] = True
    mask[4, 5:9] = True
    blobs = connected_components(mask)

    assert [blob.area for blob in filter_blobs(blobs, 4)] == [4]
    assert filter_blobs(blobs, 1) == blobs


@pytest.mark.parametrize("orientation", [0.0, 30.0, 45.0, 60.0, 90.0, 120.0, 150.0])
def test_pca_recovers_ellipse_orientation(orientation: float) -> None:
    phi = math.radians(orientation)
    ys, xs = np.mgrid[-30:31, -30:31]
    u = xs * math.cos(phi) + ys * math.sin(phi)
    v = -xs * math.sin(phi) + ys * math.cos(phi)
    inside = (u / 24.0) ** 2 + (v / 5.0) ** 2 <= 1.0

    angle, ratio = pca_axis(np.column_stack((xs[inside], ys[inside])))

    error = abs(angle - orientation) % 180.0
    assert min(error, 180.0 - error) <= 2.0
    assert ratio >= 4.0


@pytest.mark.parametrize("connectivity", [4, 8])
def test_labeling_over_random_masks(connectivity: int) -> None:
    rng = np.random.default_rng(200 + connectivity)

    for _ in range(200):
        mask = rng.random((32, 32)) < rng.uniform(0.2, 0.7)
        labels, blobs = label_components(mask, connectivity)
        expected = _flood_fill_reference(mask, connectivity)

        assert [blob.area for blob in blobs] == [region["area"] for region in expected]
        assert [blob.bbox for blob in blobs] == [region["bbox"] for region in expected]
        assert [blob.perimeter for blob in blobs] == [region["perimeter"] for region in expected]
        for blob, region in zip(blobs, expected, strict=True):
            assert blob.centroid == pytest.approx(region["centroid"])
            assert int((labels == blob.label).sum()) == blob.area


def test_pca_ignores_translation() -> None:
    rng = np.random.default_rng(55)

    for _ in range(100):
        points = rng.normal(size=(40, 2)) * rng.uniform(0.5, 6.0, size=2)
        shift = rng.uniform(-500.0, 500.0, size=2)

        angle, ratio = pca_axis(points)
        moved_angle, moved_ratio = pca_axis(points + shift)

        error = abs(angle - moved_angle) % 180.0
        assert min(error, 180.0 - error) <= 1e-6
        assert moved_ratio == pytest.approx(ratio, rel=1e-6)


def test_pca_rotation_shifts_angle() -> None:
    rng = np.random.default_rng(56)

    for _ in range(100):
        points = rng.normal(size=(60, 2)) * np.array([8.0, 1.5])
        phi = float(rng.uniform(0.0, 180.0))
        c, s = math.cos(math.radians(phi)), math.sin(math.radians(phi))
        rotated = points @ np.array([[c, s], [-s, c]])

        angle, _ = pca_axis(points)
        rotated_angle, _ = pca_axis(rotated)

        error = abs(rotated_angle - (angle + phi)) % 180.0
        assert min(error, 180.0 - error) <= 1e-6
