from __future__ import annotations

import io

import cv2
import numpy as np
import numpy.typing as npt
from PIL import Image, UnidentifiedImageError

from lavawatch.core.errors import MalformedImage, UnsupportedFormat
from lavawatch.core.interfaces import BinaryMask, Frame, HsvPixel, HsvRange

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
PPM_MAGIC = b"P6"
SUPPORTED_FORMATS = ("ppm", "png")
_CONVERTIBLE_MODES = {"RGB", "RGBA", "L", "LA", "P", "PA"}


def sniff_format(data: bytes) -> str:
    if data.startswith(PNG_MAGIC):
        return "png"
    if data.startswith(PPM_MAGIC):
        return "ppm"
    raise UnsupportedFormat("unrecognized image signature")


def decode_frame(
    data: bytes,
    fmt: str | None = None,
    frame_id: int = 0,
    timestamp_ms: int = 0,
) -> Frame:
    """Decode a P6 PPM or 8-bit PNG into a Frame, dropping any alpha channel."""
    if fmt is None:
        fmt = sniff_format(data)
    fmt = fmt.strip().lower()
    if fmt not in SUPPORTED_FORMATS:
        raise UnsupportedFormat(f"unsupported image format: {fmt}")
    expected_magic = PNG_MAGIC if fmt == "png" else PPM_MAGIC
    if not data.startswith(expected_magic):
        raise MalformedImage(f"missing {fmt} header")
    try:
        with Image.open(io.BytesIO(data), formats=[fmt.upper()]) as img:
            img.load()
            if img.mode not in _CONVERTIBLE_MODES:
                raise UnsupportedFormat(f"unsupported {fmt} pixel mode: {img.mode}")
            rgb = img.convert("RGB") if img.mode != "RGB" else img
            pixels = np.array(rgb, dtype=np.uint8)
    except UnsupportedFormat:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise MalformedImage(f"cannot decode {fmt} image: {exc}") from exc
    return Frame(pixels=pixels, frame_id=frame_id, timestamp_ms=timestamp_ms)


def encode_png(frame: Frame, compress_level: int = 1) -> bytes:
    # cv2 releases the GIL while encoding.
    bgr = cv2.cvtColor(np.ascontiguousarray(frame.pixels), cv2.COLOR_RGB2BGR)
    ok, encoded = cv2.imencode(".png", bgr, [cv2.IMWRITE_PNG_COMPRESSION, compress_level])
    if not ok:
        raise ValueError(f"cannot encode frame_id={frame.frame_id} as PNG")
    return encoded.tobytes()


def frame_from_array(
    pixels: npt.ArrayLike,
    frame_id: int = 0,
    timestamp_ms: int = 0,
) -> Frame:
    return Frame(
        pixels=np.array(pixels, dtype=np.uint8),
        frame_id=frame_id,
        timestamp_ms=timestamp_ms,
    )


def rgb_to_hsv(pixel: tuple[int, int, int]) -> HsvPixel:
    """Hexcone conversion; hue in degrees [0, 360), saturation relative to the max channel."""
    r, g, b = (int(channel) for channel in pixel)
    mx = max(r, g, b)
    mn = min(r, g, b)
    delta = mx - mn
    v = mx / 255.0
    s = delta / mx if mx > 0 else 0.0
    if delta == 0:
        return HsvPixel(0.0, s, v)
    if mx == r:
        h = 60.0 * ((g - b) / delta)
    elif mx == g:
        h = 60.0 * ((b - r) / delta + 2.0)
    else:
        h = 60.0 * ((r - g) / delta + 4.0)
    h %= 360.0
    if h >= 360.0:
        h = 0.0
    return HsvPixel(h, s, v)


def hsv_to_rgb(pixel: HsvPixel) -> tuple[int, int, int]:
    h, s, v = pixel
    c = v * s
    sector = (h % 360.0) / 60.0
    x = c * (1.0 - abs(sector % 2.0 - 1.0))
    m = v - c
    index = int(sector) % 6
    r1, g1, b1 = (
        (c, x, 0.0),
        (x, c, 0.0),
        (0.0, c, x),
        (0.0, x, c),
        (x, 0.0, c),
        (c, 0.0, x),
    )[index]
    return (
        int(round((r1 + m) * 255.0)),
        int(round((g1 + m) * 255.0)),
        int(round((b1 + m) * 255.0)),
    )


def rgb_to_hsv_array(
    pixels: npt.NDArray[np.uint8],
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    rgb = pixels.astype(np.int32)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    delta = mx - mn
    v = mx / 255.0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(mx > 0, delta / np.where(mx > 0, mx, 1), 0.0)
        safe = np.where(delta > 0, delta, 1)
        h_r = 60.0 * ((g - b) / safe)
        h_g = 60.0 * ((b - r) / safe + 2.0)
        h_b = 60.0 * ((r - g) / safe + 4.0)
    h = np.where(mx == r, h_r, np.where(mx == g, h_g, h_b))
    h = np.where(delta == 0, 0.0, np.mod(h, 360.0))
    h = np.where(h >= 360.0, 0.0, h)
    return h, s, v


def hsv_gate(pixels: npt.NDArray[np.uint8], hsv_range: HsvRange) -> BinaryMask:
    h, s, v = rgb_to_hsv_array(pixels)
    if hsv_range.wraps:
        hue_ok = (h >= hsv_range.h_lo) | (h <= hsv_range.h_hi)
    else:
        hue_ok = (h >= hsv_range.h_lo) & (h <= hsv_range.h_hi)
    return (
        hue_ok
        & (s >= hsv_range.s_lo)
        & (s <= hsv_range.s_hi)
        & (v >= hsv_range.v_lo)
        & (v <= hsv_range.v_hi)
    )


def in_range(frame: Frame, hsv_range: HsvRange) -> BinaryMask:
    return hsv_gate(frame.pixels, hsv_range)
