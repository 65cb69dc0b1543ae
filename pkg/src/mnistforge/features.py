"""Per-image feature extraction: embedding, visual attributes, object scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .hierarchy import CategoryHierarchy, all_prompts

ANALYSIS_SIZE = 224          # visual attributes are measured on this resize
SOBEL_EDGE_THRESHOLD = 0.25  # gradient magnitude on [0,1] luminance
MIN_IMAGE_SIDE = 8

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageTooSmall(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Embedding:
    values: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.values, dtype=np.float64)
        if vec.shape != (512,):
            raise ValueError(f"embedding must be 512-dim, got {vec.shape}")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"embedding must be unit-norm, |v|={norm}")
        object.__setattr__(self, "values", vec)


@dataclass(frozen=True)
class VisualAttributes:
    brightness: float
    contrast: float
    edge_density: float

    def __post_init__(self):
        for name in ("brightness", "contrast", "edge_density"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v} outside [0,1]")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.brightness, self.contrast, self.edge_density)


@dataclass(frozen=True, eq=False)
class FeatureBundle:
    embedding: Embedding
    visual: VisualAttributes
    objects: dict[str, float] = field(default_factory=dict)


def mapped_cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of unit vectors rescaled from [-1,1] to [0,1]."""
    return float(np.clip((float(np.dot(u, v)) + 1.0) / 2.0, 0.0, 1.0))


def luminance(pixels_f64: np.ndarray) -> np.ndarray:
    """Weighted luminance plane in [0,1] from an H x W x 3 float array in [0,255]."""
    r, g, b = pixels_f64[:, :, 0], pixels_f64[:, :, 1], pixels_f64[:, :, 2]
    return (LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b) / 255.0


def compute_visual_attributes(pixels: np.ndarray) -> VisualAttributes:
    """Brightness / contrast / edge density on a 224x224 bilinear-resized copy."""
    resized = kernels.bilinear_resize(
        pixels.astype(np.float64), ANALYSIS_SIZE, ANALYSIS_SIZE
    )
    lum = luminance(resized)
    brightness = float(np.mean(lum))
    contrast = float(np.std(lum))
    grad = kernels.sobel_magnitude(lum)
    edge_density = float(np.mean(grad > SOBEL_EDGE_THRESHOLD))
    return VisualAttributes(
        brightness=min(max(brightness, 0.0), 1.0),
        contrast=min(max(contrast, 0.0), 1.0),
        edge_density=edge_density,
    )


class PromptSet:
    """The hierarchy's prompt texts paired with their embeddings for a run."""

    def __init__(self, prompts: list[str], vectors: list[np.ndarray]):
        if len(prompts) != len(vectors):
            raise ValueError("prompt/vector count mismatch")
        self.prompts = list(prompts)
        self._by_text = {p: v for p, v in zip(prompts, vectors)}

    @classmethod
    def build(cls, h: CategoryHierarchy, provider) -> "PromptSet":
        prompts = all_prompts(h)
        if hasattr(provider, "embed_texts"):
            vectors = provider.embed_texts(prompts)
        else:
            vectors = [provider.embed_text(p) for p in prompts]
        return cls(prompts, vectors)

    def vector(self, prompt: str) -> np.ndarray:
        return self._by_text[prompt]

    def __contains__(self, prompt: str) -> bool:
        return prompt in self._by_text


def extract_features(record, h: CategoryHierarchy, provider,
                     prompts: PromptSet | None = None) -> FeatureBundle:
    """Full feature bundle for one acquired image.

    record needs .pixels (H x W x 3 u8) and optionally .concept_hint; that is
    the acquisition ImageRecord shape, but any duck-typed object works.
    """
    pixels = record.pixels
    if min(pixels.shape[0], pixels.shape[1]) < MIN_IMAGE_SIDE:
        raise ImageTooSmall(
            f"image {pixels.shape[1]}x{pixels.shape[0]} below minimum "
            f"{MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}"
        )
    hint = getattr(record, "concept_hint", None)
    vec = provider.embed_image(pixels, concept_hint=hint)
    embedding = Embedding(vec)
    visual = compute_visual_attributes(pixels)
    if prompts is None:
        prompts = PromptSet.build(h, provider)
    objects = {
        p: mapped_cosine(embedding.values, prompts.vector(p)) for p in prompts.prompts
    }
    return FeatureBundle(embedding=embedding, visual=visual, objects=objects)
