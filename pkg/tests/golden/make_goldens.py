"""Regenerate the golden fixtures in this directory.

Every golden is produced by straight-line arithmetic written here, not by
the library under test, so the comparisons in the test suite are
independent. Run from the repository root:

    python3 tests/golden/make_goldens.py
"""

import math
import struct
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent


def fixture_rgb_8x8() -> np.ndarray:
    """Deterministic 8x8 RGB image with varied values, none of whose weighted
    gray values land near a .5 rounding boundary (asserted below)."""
    rng = np.random.default_rng(20240611)
    img = rng.integers(0, 256, size=(8, 8, 3)).astype(np.uint8)
    return img


def weighted_gray_reference(img: np.ndarray) -> np.ndarray:
    out = np.zeros(img.shape[:2], dtype=np.uint8)
    for i in range(img.shape[0]):
        for j in range(img.shape[1]):
            r, g, b = (float(img[i, j, 0]), float(img[i, j, 1]), float(img[i, j, 2]))
            v = 0.299 * r + 0.587 * g + 0.114 * b
            frac = v - math.floor(v)
            assert abs(frac - 0.5) > 1e-6, "fixture hit a rounding boundary"
            out[i, j] = int(math.floor(v + 0.5))
    return out


def ramp_64() -> np.ndarray:
    """64x64 RGB ramp encoding (row, col) in the pixel values."""
    img = np.zeros((64, 64, 3), dtype=np.uint8)
    for i in range(64):
        for j in range(64):
            img[i, j] = (i * 4 % 256, j * 4 % 256, (i + j) % 256)
    return img


def center_crop_reference(img: np.ndarray, h: int, w: int) -> np.ndarray:
    top = (img.shape[0] - h) // 2
    left = (img.shape[1] - w) // 2
    return img[top:top + h, left:left + w].copy()


def bilinear_resize_reference(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Loop reimplementation of half-pixel-center bilinear sampling."""
    h, w, c = img.shape
    src = img.astype(np.float64)
    out = np.zeros((out_h, out_w, c), dtype=np.float64)
    for i in range(out_h):
        sy = (i + 0.5) * (h / out_h) - 0.5
        y0 = math.floor(sy)
        fy = sy - y0
        y0c = min(max(int(y0), 0), h - 1)
        y1c = min(max(int(y0) + 1, 0), h - 1)
        for j in range(out_w):
            sx = (j + 0.5) * (w / out_w) - 0.5
            x0 = math.floor(sx)
            fx = sx - x0
            x0c = min(max(int(x0), 0), w - 1)
            x1c = min(max(int(x0) + 1, 0), w - 1)
            for ch in range(c):
                top = src[y0c, x0c, ch] * (1 - fx) + src[y0c, x1c, ch] * fx
                bot = src[y1c, x0c, ch] * (1 - fx) + src[y1c, x1c, ch] * fx
                out[i, j, ch] = top * (1 - fy) + bot * fy
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def main():
    fixture = fixture_rgb_8x8()
    np.save(HERE / "fixture_rgb_8x8.npy", fixture)
    np.save(HERE / "gray_weighted_8x8.npy", weighted_gray_reference(fixture))

    ramp = ramp_64()
    np.save(HERE / "ramp_rgb_64.npy", ramp)
    np.save(HERE / "crop_28_of_ramp64.npy", center_crop_reference(ramp, 28, 28))
    np.save(HERE / "resize_28_of_ramp64.npy", bilinear_resize_reference(ramp, 28, 28))

    # IDX headers: one 28x28 image, one label, big-endian sizes
    (HERE / "idx_images_header.bin").write_bytes(
        struct.pack(">IIII", 0x00000803, 1, 28, 28)
    )
    (HERE / "idx_labels_header.bin").write_bytes(struct.pack(">II", 0x00000801, 1))
    print("golden fixtures written to", HERE)


if __name__ == "__main__":
    main()
