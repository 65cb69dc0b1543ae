"""Decode, encode, and fingerprint raster images.

Content ids are SHA-256 over the decoded canonical RGB byte stream rather
than the compressed file, so the same picture re-encoded by a web host still
deduplicates.
"""

from __future__ import annotations

import base64
import hashlib
import io

import numpy as np
from PIL import Image


class ImageDecodeError(ValueError):
    """Raised when bytes cannot be decoded into an RGB image."""


def decode_rgb(data: bytes) -> np.ndarray:
    """Decode PNG/JPEG bytes into an H x W x 3 uint8 array."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except Exception as exc:
        raise ImageDecodeError(f"undecodable image: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageDecodeError(f"unexpected decoded shape {arr.shape}")
    return arr


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode a uint8 array (H x W or H x W x 3) as PNG bytes."""
    if pixels.ndim == 2:
        img = Image.fromarray(pixels, mode="L")
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        img = Image.fromarray(pixels, mode="RGB")
    elif pixels.ndim == 3 and pixels.shape[2] == 1:
        img = Image.fromarray(pixels[:, :, 0], mode="L")
    else:
        raise ValueError(f"cannot encode shape {pixels.shape}")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def content_id(pixels: np.ndarray) -> str:
    """SHA-256 hex digest of the raw pixel bytes plus shape."""
    h = hashlib.sha256()
    h.update(str(pixels.shape).encode("ascii"))
    h.update(np.ascontiguousarray(pixels).tobytes())
    return h.hexdigest()


def png_base64(pixels: np.ndarray) -> str:
    return base64.b64encode(encode_png(pixels)).decode("ascii")


def png_from_base64(payload: str) -> np.ndarray:
    return decode_rgb(base64.b64decode(payload))
