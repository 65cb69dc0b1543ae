"""Embedding backends for the sidecar.

ClipEncoder wraps a pretrained ViT-B/32 vision-language model (512-dim
projection heads). HashEncoder is a dependency-free deterministic stand-in
with the same surface, used by the protocol tests and for offline smoke
runs; it produces the same vectors as the core toolkit's stub provider.
"""

from __future__ import annotations

import hashlib
import io
import re

import numpy as np
from PIL import Image

EMBEDDING_DIM = 512

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EncoderError(RuntimeError):
    pass


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise EncoderError("zero-norm embedding")
    return vec / norm


def decode_image(data: bytes) -> Image.Image:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
        return img.convert("RGB")
    except Exception as exc:
        raise EncoderError(f"undecodable image payload: {exc}") from exc


class HashEncoder:
    """Pure deterministic encoder: token hash -> seeded Gaussian, averaged."""

    name = "hash"

    @staticmethod
    def _seeded(seed_material: bytes) -> np.ndarray:
        digest = hashlib.sha256(seed_material).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        return rng.standard_normal(EMBEDDING_DIM)

    def encode_text(self, text: str) -> np.ndarray:
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            return _normalize(self._seeded(b"text:" + text.encode("utf-8")))
        acc = np.zeros(EMBEDDING_DIM)
        for tok in tokens:
            acc += self._seeded(b"token:" + tok.encode("utf-8"))
        return _normalize(acc / len(tokens))

    def encode_image(self, data: bytes) -> np.ndarray:
        img = decode_image(data)
        digest = hashlib.sha256(np.asarray(img, dtype=np.uint8).tobytes()).digest()
        return _normalize(self._seeded(b"image:" + digest))


class ClipEncoder:
    """ViT-B/32 text and image towers in eval mode; unit-normalized outputs."""

    name = "clip"

    def __init__(self, model_name: str = "openai/clip-vit-base-patch32",
                 device: str = "cpu"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderError(
                f"clip backend needs torch and transformers installed: {exc}"
            ) from exc
        try:
            self.model = CLIPModel.from_pretrained(model_name).to(device).eval()
            self.processor = CLIPProcessor.from_pretrained(model_name)
        except Exception as exc:
            raise EncoderError(f"cannot load model '{model_name}': {exc}") from exc
        self.torch = torch
        self.device = device
        dim = int(self.model.config.projection_dim)
        if dim != EMBEDDING_DIM:
            raise EncoderError(
                f"model projects to {dim} dims, protocol requires {EMBEDDING_DIM}"
            )

    def encode_text(self, text: str) -> np.ndarray:
        inputs = self.processor(text=[text], return_tensors="pt", padding=True,
                                truncation=True).to(self.device)
        with self.torch.no_grad():
            feats = self.model.get_text_features(**inputs)
        return _normalize(feats[0].cpu().numpy().astype(np.float64))

    def encode_image(self, data: bytes) -> np.ndarray:
        img = decode_image(data)
        inputs = self.processor(images=img, return_tensors="pt").to(self.device)
        with self.torch.no_grad():
            feats = self.model.get_image_features(**inputs)
        return _normalize(feats[0].cpu().numpy().astype(np.float64))


def make_encoder(backend: str, model_name: str = "openai/clip-vit-base-patch32",
                 device: str = "cpu"):
    if backend == "hash":
        return HashEncoder()
    if backend == "clip":
        return ClipEncoder(model_name=model_name, device=device)
    raise EncoderError(f"unknown backend '{backend}'")
