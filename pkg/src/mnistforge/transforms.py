"""Composable deterministic image transformations.

Every stage is a pure function from AnnotatedImage to AnnotatedImage, so a
pipeline is ordinary function composition and obeys the two laws the test
suite checks bit-exactly: applying an empty pipeline is the identity, and
applying compose(p, q) equals applying p then q.

Pixel-only stages never touch the semantic annotation; SemanticTag never
touches pixels. Channel compatibility (e.g. Binarize needs a grayscale
input) is validated when a Pipeline is constructed, not at apply time;
size problems (crop larger than image) surface at apply time because input
sizes vary.

Grayscale rounding is half-up. Binarize uses a strict `gray > theta`
comparison. Normalize leaves the u8 plane untouched and attaches the
real-valued (x/255 - mu)/sigma plane alongside, since exported payloads
stay u8.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import kernels
from .scoring import CategorizationResult


class PipelineError(ValueError):
    """Incompatible stage chain or invalid stage parameters."""


@dataclass(frozen=True, eq=False)
class AnnotatedImage:
    pixels: np.ndarray  # H x W x C uint8, C in {1, 3}
    semantic: CategorizationResult | None = None
    normalized: np.ndarray | None = None  # H x W float64, from Normalize
    source_id: str | None = None
    concept_hint: str | None = None

    def __post_init__(self):
        px = self.pixels
        if px.dtype != np.uint8 or px.ndim != 3 or px.shape[2] not in (1, 3):
            raise PipelineError(
                f"pixels must be H x W x C uint8 with C in {{1,3}}, got "
                f"{px.dtype} {px.shape}"
            )

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def from_record(cls, record) -> "AnnotatedImage":
        return cls(
            pixels=np.ascontiguousarray(record.pixels, dtype=np.uint8),
            source_id=getattr(record, "id", None),
            concept_hint=getattr(record, "concept_hint", None),
        )


def images_equal(a: AnnotatedImage, b: AnnotatedImage) -> bool:
    """Bit-exact equality over pixels, normalized plane, and annotation."""
    if a.pixels.shape != b.pixels.shape or not np.array_equal(a.pixels, b.pixels):
        return False
    if (a.normalized is None) != (b.normalized is None):
        return False
    if a.normalized is not None and not np.array_equal(a.normalized, b.normalized):
        return False
    return a.semantic == b.semantic


class Stage:
    """One morphism. Subclasses define channel contracts and the pixel map."""

    kind: str = "stage"

    def output_channels(self, input_channels: int) -> int:
        """Channel count after this stage; raises PipelineError if incompatible."""
        raise NotImplementedError

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        raise NotImplementedError

    def config(self) -> dict:
        return {"kind": self.kind}

    def __repr__(self):
        return f"{type(self).__name__}({self.config()})"


class SemanticTag(Stage):
    """Attaches a categorization annotation; pixels pass through untouched."""

    kind = "semantic_tag"

    def __init__(self, categorizer: Callable[[AnnotatedImage], CategorizationResult]):
        self.categorizer = categorizer

    def output_channels(self, input_channels: int) -> int:
        if input_channels != 3:
            raise PipelineError("semantic_tag requires an RGB input")
        return 3

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        return replace(image, semantic=self.categorizer(image))


class BackgroundRemoval(Stage):
    """Named extension point; identity unless a matting callable is plugged in."""

    kind = "background_removal"

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray] | None = None):
        self.fn = fn

    def output_channels(self, input_channels: int) -> int:
        return input_channels

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        if self.fn is None:
            return image
        out = np.ascontiguousarray(self.fn(image.pixels), dtype=np.uint8)
        if out.shape != image.pixels.shape:
            raise PipelineError("background removal must preserve shape")
        return replace(image, pixels=out)


class Resize(Stage):
    kind = "resize"

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise PipelineError("resize dimensions must be >= 1")
        self.width = int(width)
        self.height = int(height)

    def output_channels(self, input_channels: int) -> int:
        return input_channels

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        resized = kernels.bilinear_resize(
            image.pixels.astype(np.float64), self.height, self.width
        )
        return replace(image, pixels=kernels.round_half_up_u8(resized))

    def config(self) -> dict:
        return {"kind": self.kind, "width": self.width, "height": self.height}


class CenterCrop(Stage):
    kind = "center_crop"

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise PipelineError("crop dimensions must be >= 1")
        self.width = int(width)
        self.height = int(height)

    def output_channels(self, input_channels: int) -> int:
        return input_channels

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        if self.height > image.height or self.width > image.width:
            raise PipelineError(
                f"crop {self.width}x{self.height} larger than image "
                f"{image.width}x{image.height}"
            )
        top = (image.height - self.height) // 2
        left = (image.width - self.width) // 2
        out = image.pixels[top:top + self.height, left:left + self.width, :]
        return replace(image, pixels=np.ascontiguousarray(out))

    def config(self) -> dict:
        return {"kind": self.kind, "width": self.width, "height": self.height}


class Grayscale(Stage):
    """RGB -> single channel; mode 'mean' averages equally, 'weighted' uses
    the 0.299/0.587/0.114 luma weights."""

    kind = "grayscale"

    def __init__(self, mode: str = "weighted"):
        if mode not in ("mean", "weighted"):
            raise PipelineError(f"unknown grayscale mode '{mode}'")
        self.mode = mode

    def output_channels(self, input_channels: int) -> int:
        if input_channels != 3:
            raise PipelineError("grayscale requires an RGB input")
        return 1

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        px = image.pixels.astype(np.float64)
        r, g, b = px[:, :, 0], px[:, :, 1], px[:, :, 2]
        if self.mode == "mean":
            gray = (r + g + b) / 3.0
        else:
            gray = 0.299 * r + 0.587 * g + 0.114 * b
        out = kernels.round_half_up_u8(gray)[:, :, None]
        return replace(image, pixels=np.ascontiguousarray(out))

    def config(self) -> dict:
        return {"kind": self.kind, "mode": self.mode}


def otsu_threshold(gray: np.ndarray) -> int:
    """Threshold maximizing between-class variance over the 256-bin histogram.

    Computed in exact integer arithmetic so the argmax is never decided by
    float rounding; ties break toward the smallest threshold. A constant
    image returns its single occupied bin (binarizing with strict > then
    yields all zeros).
    """
    flat = np.asarray(gray).ravel()
    if flat.size == 0:
        raise ValueError("otsu needs at least one pixel")
    hist = np.bincount(flat.astype(np.int64), minlength=256)
    occupied = np.nonzero(hist)[0]
    if len(occupied) == 1:
        return int(occupied[0])
    total = int(flat.size)
    total_sum = int(np.dot(hist, np.arange(256)))
    best_t = 0
    best_num = -1  # best variance as fraction best_num / best_den
    best_den = 1
    w0 = 0
    s0 = 0
    for t in range(256):
        w0 += int(hist[t])
        s0 += t * int(hist[t])
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            num, den = 0, 1
        else:
            diff = s0 * w1 - (total_sum - s0) * w0
            num = diff * diff
            den = w0 * w1
        if num * best_den > best_num * den:
            best_num, best_den, best_t = num, den, t
    return best_t


class Binarize(Stage):
    """Grayscale -> {0, 255}; threshold fixed or chosen per image by Otsu."""

    kind = "binarize"

    def __init__(self, mode: str = "otsu", theta: int | None = None):
        if mode not in ("otsu", "fixed"):
            raise PipelineError(f"unknown binarize mode '{mode}'")
        if mode == "fixed":
            if theta is None or not (0 <= theta <= 255):
                raise PipelineError("fixed binarize needs theta in [0,255]")
            self.theta = int(theta)
        else:
            self.theta = None
        self.mode = mode

    def output_channels(self, input_channels: int) -> int:
        if input_channels != 1:
            raise PipelineError("binarize requires a grayscale input")
        return 1

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        plane = image.pixels[:, :, 0]
        theta = self.theta if self.mode == "fixed" else otsu_threshold(plane)
        out = np.where(plane > theta, 255, 0).astype(np.uint8)[:, :, None]
        return replace(image, pixels=np.ascontiguousarray(out))

    def config(self) -> dict:
        cfg = {"kind": self.kind, "mode": self.mode}
        if self.mode == "fixed":
            cfg["theta"] = self.theta
        return cfg


class Normalize(Stage):
    """Attach the real-valued (x/255 - mu)/sigma plane; u8 pixels unchanged."""

    kind = "normalize"

    def __init__(self, mu: float = 0.5, sigma: float = 0.5):
        if sigma <= 0:
            raise PipelineError("sigma must be positive")
        self.mu = float(mu)
        self.sigma = float(sigma)

    def output_channels(self, input_channels: int) -> int:
        if input_channels != 1:
            raise PipelineError("normalize requires a grayscale input")
        return 1

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        plane = image.pixels[:, :, 0].astype(np.float64)
        normalized = (plane / 255.0 - self.mu) / self.sigma
        return replace(image, normalized=normalized)

    def config(self) -> dict:
        return {"kind": self.kind, "mu": self.mu, "sigma": self.sigma}


class Rotate(Stage):
    """Bilinear rotation about the image center; outside area fills with 0."""

    kind = "rotate"

    def __init__(self, degrees: float):
        self.degrees = float(degrees)

    def output_channels(self, input_channels: int) -> int:
        return input_channels

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        if self.degrees == 0.0:
            return image
        rotated = kernels.rotate_bilinear(image.pixels.astype(np.float64), self.degrees)
        return replace(image, pixels=kernels.round_half_up_u8(rotated))

    def config(self) -> dict:
        return {"kind": self.kind, "degrees": self.degrees}


class ContrastStretch(Stage):
    """Per-channel linear stretch to the full [0,255] range."""

    kind = "contrast_stretch"

    def output_channels(self, input_channels: int) -> int:
        return input_channels

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        px = image.pixels.astype(np.float64)
        out = px.copy()
        for c in range(px.shape[2]):
            lo = px[:, :, c].min()
            hi = px[:, :, c].max()
            if hi > lo:
                out[:, :, c] = (px[:, :, c] - lo) * 255.0 / (hi - lo)
        return replace(image, pixels=kernels.round_half_up_u8(out))


class Pipeline:
    """An ordered stage chain, channel-checked at construction."""

    def __init__(self, stages: list[Stage], input_channels: int = 3):
        self.input_channels = input_channels
        channels = input_channels
        for idx, stage in enumerate(stages):
            try:
                channels = stage.output_channels(channels)
            except PipelineError as exc:
                raise PipelineError(f"stage {idx} ({stage.kind}): {exc}") from exc
        self.output_channels = channels
        self.stages = list(stages)

    def apply(self, image: AnnotatedImage) -> AnnotatedImage:
        if image.channels != self.input_channels:
            raise PipelineError(
                f"pipeline expects {self.input_channels}-channel input, "
                f"got {image.channels}"
            )
        for stage in self.stages:
            image = stage.apply(image)
        return image

    def apply_all(self, images) -> list[AnnotatedImage]:
        return [self.apply(img) for img in images]

    def config(self) -> list[dict]:
        return [s.config() for s in self.stages]

    def __len__(self):
        return len(self.stages)


def apply_stage(stage: Stage, image: AnnotatedImage) -> AnnotatedImage:
    stage.output_channels(image.channels)  # surface incompatibility eagerly
    return stage.apply(image)


def identity_pipeline(input_channels: int = 3) -> Pipeline:
    return Pipeline([], input_channels=input_channels)


def compose(p: Pipeline, q: Pipeline) -> Pipeline:
    """Pipeline running p then q; validated at the seam."""
    if q.input_channels != p.output_channels:
        raise PipelineError(
            f"cannot compose: p yields {p.output_channels} channels, "
            f"q expects {q.input_channels}"
        )
    return Pipeline(p.stages + q.stages, input_channels=p.input_channels)


@dataclass
class DivergenceReport:
    """How two pipelines disagree on a shared input set.

    stage_deltas[i] is the max absolute pixel delta across all inputs after
    stage i of each pipeline (None when shapes differ or a pipeline has no
    stage i). image_deltas[j] is the end-to-end delta for input j.
    """

    stage_deltas: list[int | None]
    image_deltas: list[int | None]

    @property
    def max_output_delta(self) -> int | None:
        known = [d for d in self.image_deltas if d is not None]
        if len(known) < len(self.image_deltas):
            return None
        return max(known) if known else 0

    @property
    def commutes(self) -> bool:
        return self.max_output_delta == 0


def _pixel_delta(a: np.ndarray, b: np.ndarray) -> int | None:
    if a.shape != b.shape:
        return None
    return int(np.max(np.abs(a.astype(np.int64) - b.astype(np.int64)))) if a.size else 0


def compare_pipelines(p1: Pipeline, p2: Pipeline,
                      inputs: list[AnnotatedImage]) -> DivergenceReport:
    """Stage-wise and end-to-end divergence between two pipelines."""
    n_stages = max(len(p1), len(p2))
    stage_worst: list[int | None] = [0] * n_stages
    image_deltas: list[int | None] = []
    for img in inputs:
        x1, x2 = img, img
        for i in range(n_stages):
            if i < len(p1.stages):
                x1 = p1.stages[i].apply(x1)
            if i < len(p2.stages):
                x2 = p2.stages[i].apply(x2)
            if i >= len(p1.stages) or i >= len(p2.stages):
                stage_worst[i] = None
                continue
            delta = _pixel_delta(x1.pixels, x2.pixels)
            if delta is None or stage_worst[i] is None:
                stage_worst[i] = None
            else:
                stage_worst[i] = max(stage_worst[i], delta)
        image_deltas.append(_pixel_delta(x1.pixels, x2.pixels))
    return DivergenceReport(stage_deltas=stage_worst, image_deltas=image_deltas)


def apply_to_stack(p: Pipeline, stack: np.ndarray) -> np.ndarray:
    """Map a pixel-only pipeline over an N x H x W u8 stack, labels untouched.

    This is the dataset-level augmentation hook: the per-image map lifts to
    whole MNIST-style datasets and composes with the raw-to-dataset pipeline.
    """
    out = []
    for i in range(stack.shape[0]):
        img = AnnotatedImage(pixels=np.ascontiguousarray(stack[i][:, :, None]))
        result = p.apply(img)
        out.append(result.pixels[:, :, 0])
    return np.stack(out, axis=0) if out else stack.copy()


_DEFAULT_EXPORT_SIZE = 28


def stage_from_config(cfg: dict, categorizer=None) -> Stage:
    """Build one stage from its JSON object form."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise PipelineError(f"stage config must be an object with 'kind': {cfg!r}")
    kind = cfg["kind"]
    params = {k: v for k, v in cfg.items() if k != "kind"}
    try:
        if kind == "semantic_tag":
            if categorizer is None:
                raise PipelineError("semantic_tag needs a categorizer in this context")
            return SemanticTag(categorizer)
        if kind == "background_removal":
            return BackgroundRemoval()
        if kind == "resize":
            return Resize(width=params["width"], height=params["height"])
        if kind == "center_crop":
            return CenterCrop(width=params["width"], height=params["height"])
        if kind == "grayscale":
            return Grayscale(mode=params.get("mode", "weighted"))
        if kind == "binarize":
            return Binarize(mode=params.get("mode", "otsu"), theta=params.get("theta"))
        if kind == "normalize":
            return Normalize(mu=params.get("mu", 0.5), sigma=params.get("sigma", 0.5))
        if kind == "rotate":
            return Rotate(degrees=params["degrees"])
        if kind == "contrast_stretch":
            return ContrastStretch()
    except KeyError as exc:
        raise PipelineError(f"stage '{kind}' missing parameter {exc}") from exc
    raise PipelineError(f"unknown stage kind '{kind}'")


def pipeline_from_config(stage_cfgs: list[dict], categorizer=None,
                         input_channels: int = 3) -> Pipeline:
    stages = [stage_from_config(c, categorizer=categorizer) for c in stage_cfgs]
    return Pipeline(stages, input_channels=input_channels)


def default_stage_configs(size: int = _DEFAULT_EXPORT_SIZE, binarize: bool = True) -> list[dict]:
    """The standard chain: tag, resize 64, crop to target, weighted gray, then
    Otsu binarize or 0.5/0.5 normalize."""
    chain = [
        {"kind": "semantic_tag"},
        {"kind": "resize", "width": 64, "height": 64},
        {"kind": "center_crop", "width": size, "height": size},
        {"kind": "grayscale", "mode": "weighted"},
    ]
    if binarize:
        chain.append({"kind": "binarize", "mode": "otsu"})
    else:
        chain.append({"kind": "normalize", "mu": 0.5, "sigma": 0.5})
    return chain
