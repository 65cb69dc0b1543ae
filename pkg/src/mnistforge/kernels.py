"""Pixel-level inner loops: bilinear resize, Sobel gradients, rotation.

Two interchangeable backends live here. The default is numba @njit; setting
the environment variable ``MNISTFORGE_NUMBA=0`` (or a failed numba import)
selects a pure-numpy path. Both paths evaluate the same arithmetic expression
per pixel in the same order, so their outputs are bit-identical -- the
pipeline's composition guarantees and golden images rely on that.

All kernels take and return float64 arrays; callers own u8 conversion.
Sampling uses half-pixel centers: output pixel (i, j) reads source
coordinate ((j + 0.5) * w_in / w_out - 0.5, ...), clamped at the borders.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_FLAG = os.environ.get("MNISTFORGE_NUMBA", "1").strip().lower()
_WANT_NUMBA = _ENV_FLAG not in ("0", "false", "off", "no")

USING_NUMBA = False
if _WANT_NUMBA:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False


def _bilinear_resize_impl(src, out, scale_y, scale_x):
    h_in, w_in, ch = src.shape
    h_out, w_out = out.shape[0], out.shape[1]
    for i in range(h_out):
        sy = (i + 0.5) * scale_y - 0.5
        y0 = math.floor(sy)
        fy = sy - y0
        y0c = min(max(int(y0), 0), h_in - 1)
        y1c = min(max(int(y0) + 1, 0), h_in - 1)
        for j in range(w_out):
            sx = (j + 0.5) * scale_x - 0.5
            x0 = math.floor(sx)
            fx = sx - x0
            x0c = min(max(int(x0), 0), w_in - 1)
            x1c = min(max(int(x0) + 1, 0), w_in - 1)
            for c in range(ch):
                top = src[y0c, x0c, c] * (1.0 - fx) + src[y0c, x1c, c] * fx
                bot = src[y1c, x0c, c] * (1.0 - fx) + src[y1c, x1c, c] * fx
                out[i, j, c] = top * (1.0 - fy) + bot * fy
    return out


def _sobel_magnitude_impl(padded, out):
    h, w = out.shape
    for i in range(h):
        for j in range(w):
            gx = (
                (padded[i, j + 2] - padded[i, j])
                + 2.0 * (padded[i + 1, j + 2] - padded[i + 1, j])
                + (padded[i + 2, j + 2] - padded[i + 2, j])
            )
            gy = (
                (padded[i + 2, j] - padded[i, j])
                + 2.0 * (padded[i + 2, j + 1] - padded[i, j + 1])
                + (padded[i + 2, j + 2] - padded[i, j + 2])
            )
            out[i, j] = math.sqrt(gx * gx + gy * gy)
    return out


def _rotate_bilinear_impl(src, out, cos_t, sin_t, cy, cx):
    h, w, ch = src.shape
    for i in range(h):
        for j in range(w):
            # inverse map: output pixel pulled from rotated source coordinate
            dy = i - cy
            dx = j - cx
            sy = cos_t * dy + sin_t * dx + cy
            sx = -sin_t * dy + cos_t * dx + cx
            y0 = math.floor(sy)
            x0 = math.floor(sx)
            fy = sy - y0
            fx = sx - x0
            iy0 = int(y0)
            ix0 = int(x0)
            for c in range(ch):
                acc = 0.0
                if 0 <= iy0 < h and 0 <= ix0 < w:
                    acc += src[iy0, ix0, c] * (1.0 - fy) * (1.0 - fx)
                if 0 <= iy0 < h and 0 <= ix0 + 1 < w:
                    acc += src[iy0, ix0 + 1, c] * (1.0 - fy) * fx
                if 0 <= iy0 + 1 < h and 0 <= ix0 < w:
                    acc += src[iy0 + 1, ix0, c] * fy * (1.0 - fx)
                if 0 <= iy0 + 1 < h and 0 <= ix0 + 1 < w:
                    acc += src[iy0 + 1, ix0 + 1, c] * fy * fx
                out[i, j, c] = acc
    return out


if USING_NUMBA:
    _bilinear_resize_fast = njit(cache=True)(_bilinear_resize_impl)
    _sobel_magnitude_fast = njit(cache=True)(_sobel_magnitude_impl)
    _rotate_bilinear_fast = njit(cache=True)(_rotate_bilinear_impl)
else:
    _bilinear_resize_fast = _bilinear_resize_impl
    _sobel_magnitude_fast = _sobel_magnitude_impl
    _rotate_bilinear_fast = _rotate_bilinear_impl


def _numpy_bilinear_resize(src, out, scale_y, scale_x):
    h_in, w_in, _ = src.shape
    h_out, w_out = out.shape[0], out.shape[1]
    sy = (np.arange(h_out, dtype=np.float64) + 0.5) * scale_y - 0.5
    sx = (np.arange(w_out, dtype=np.float64) + 0.5) * scale_x - 0.5
    y0 = np.floor(sy)
    x0 = np.floor(sx)
    fy = (sy - y0)[:, None, None]
    fx = (sx - x0)[None, :, None]
    y0c = np.clip(y0.astype(np.int64), 0, h_in - 1)
    y1c = np.clip(y0.astype(np.int64) + 1, 0, h_in - 1)
    x0c = np.clip(x0.astype(np.int64), 0, w_in - 1)
    x1c = np.clip(x0.astype(np.int64) + 1, 0, w_in - 1)
    a = src[y0c[:, None], x0c[None, :], :]
    b = src[y0c[:, None], x1c[None, :], :]
    c = src[y1c[:, None], x0c[None, :], :]
    d = src[y1c[:, None], x1c[None, :], :]
    top = a * (1.0 - fx) + b * fx
    bot = c * (1.0 - fx) + d * fx
    out[:] = top * (1.0 - fy) + bot * fy
    return out


def _numpy_sobel_magnitude(padded, out):
    p = padded
    gx = (
        (p[0:-2, 2:] - p[0:-2, 0:-2])
        + 2.0 * (p[1:-1, 2:] - p[1:-1, 0:-2])
        + (p[2:, 2:] - p[2:, 0:-2])
    )
    gy = (
        (p[2:, 0:-2] - p[0:-2, 0:-2])
        + 2.0 * (p[2:, 1:-1] - p[0:-2, 1:-1])
        + (p[2:, 2:] - p[0:-2, 2:])
    )
    out[:] = np.sqrt(gx * gx + gy * gy)
    return out


def bilinear_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize an H x W x C float64 image with half-pixel-center bilinear sampling."""
    if src.ndim != 3:
        raise ValueError("expected H x W x C array")
    src = np.ascontiguousarray(src, dtype=np.float64)
    h_in, w_in, ch = src.shape
    out = np.empty((out_h, out_w, ch), dtype=np.float64)
    scale_y = h_in / out_h
    scale_x = w_in / out_w
    if USING_NUMBA:
        return _bilinear_resize_fast(src, out, scale_y, scale_x)
    return _numpy_bilinear_resize(src, out, scale_y, scale_x)


def sobel_magnitude(lum: np.ndarray) -> np.ndarray:
    """Gradient magnitude of a 2-D float64 plane, replicate-padded borders."""
    if lum.ndim != 2:
        raise ValueError("expected 2-D array")
    lum = np.ascontiguousarray(lum, dtype=np.float64)
    padded = np.pad(lum, 1, mode="edge")
    out = np.empty_like(lum)
    if USING_NUMBA:
        return _sobel_magnitude_fast(padded, out)
    return _numpy_sobel_magnitude(padded, out)


def rotate_bilinear(src: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate an H x W x C float64 image about its center; outside fills with 0."""
    if src.ndim != 3:
        raise ValueError("expected H x W x C array")
    src = np.ascontiguousarray(src, dtype=np.float64)
    h, w, _ = src.shape
    out = np.empty_like(src)
    theta = math.radians(degrees)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    cy = (h - 1) / 2.0
    cx = (w - 1) / 2.0
    if USING_NUMBA:
        return _rotate_bilinear_fast(src, out, cos_t, sin_t, cy, cx)
    # the loop version doubles as the fallback; rotation is rare enough that
    # plain-python speed is acceptable when numba is off
    return _rotate_bilinear_impl(src, out, cos_t, sin_t, cy, cx)


def round_half_up_u8(values: np.ndarray) -> np.ndarray:
    """Round float pixels half-up and clip into the u8 range."""
    return np.clip(np.floor(values + 0.5), 0.0, 255.0).astype(np.uint8)
