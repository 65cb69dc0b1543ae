from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from mnistforge.scoring import ScoringWeights, categorize_bundle
from mnistforge.features import PromptSet, extract_features
from mnistforge.transforms import (
    AnnotatedImage,
    BackgroundRemoval,
    Binarize,
    CenterCrop,
    ContrastStretch,
    Grayscale,
    Normalize,
    Pipeline,
    PipelineError,
    Resize,
    Rotate,
    SemanticTag,
    apply_stage,
    compare_pipelines,
    compose,
    default_stage_configs,
    identity_pipeline,
    images_equal,
    otsu_threshold,
    pipeline_from_config,
    apply_to_stack,
)

from conftest import random_rgb, solid_image

GOLDEN = Path(__file__).parent / "golden"


def rgb_image(pixels: np.ndarray) -> AnnotatedImage:
    return AnnotatedImage(pixels=np.ascontiguousarray(pixels, dtype=np.uint8))


# -- stage arithmetic ---------------------------------------------------------

def test_weighted_grayscale_of_pure_red_is_76():
    img = rgb_image(solid_image(255, 0, 0, size=4))
    out = Grayscale("weighted").apply(img)
    assert out.pixels.shape == (4, 4, 1)
    assert np.all(out.pixels == 76)


def test_mean_grayscale_of_30_60_90_is_60():
    img = rgb_image(solid_image(30, 60, 90, size=4))
    out = Grayscale("mean").apply(img)
    assert np.all(out.pixels == 60)


def test_mean_grayscale_of_pure_red_is_85():
    out = Grayscale("mean").apply(rgb_image(solid_image(255, 0, 0, size=4)))
    assert np.all(out.pixels == 85)


def test_grayscale_golden_image():
    fixture = np.load(GOLDEN / "fixture_rgb_8x8.npy")
    expected = np.load(GOLDEN / "gray_weighted_8x8.npy")
    out = Grayscale("weighted").apply(rgb_image(fixture))
    assert np.array_equal(out.pixels[:, :, 0], expected)


def test_center_crop_keeps_rows_18_to_45():
    ramp = np.load(GOLDEN / "ramp_rgb_64.npy")
    out = CenterCrop(28, 28).apply(rgb_image(ramp))
    assert np.array_equal(out.pixels, ramp[18:46, 18:46])
    assert np.array_equal(out.pixels, np.load(GOLDEN / "crop_28_of_ramp64.npy"))


def test_resize_matches_reference_golden():
    ramp = np.load(GOLDEN / "ramp_rgb_64.npy")
    out = Resize(28, 28).apply(rgb_image(ramp))
    assert np.array_equal(out.pixels, np.load(GOLDEN / "resize_28_of_ramp64.npy"))


def test_crop_larger_than_image_errors():
    with pytest.raises(PipelineError, match="larger than image"):
        CenterCrop(28, 28).apply(rgb_image(solid_image(0, 0, 0, size=16)))


def test_binarize_fixed_threshold_strict_greater():
    gray = np.array([[0, 100], [101, 255]], dtype=np.uint8)[:, :, None]
    img = AnnotatedImage(pixels=gray)
    out = Binarize(mode="fixed", theta=100).apply(img)
    assert out.pixels[:, :, 0].tolist() == [[0, 0], [255, 255]]


def test_binarize_requires_grayscale_input():
    with pytest.raises(PipelineError, match="grayscale"):
        Pipeline([Binarize(mode="fixed", theta=10)], input_channels=3)


def test_normalize_emits_plane_and_keeps_pixels():
    gray = np.arange(16, dtype=np.uint8).reshape(4, 4, 1) * 17
    img = AnnotatedImage(pixels=gray)
    out = Normalize(0.5, 0.5).apply(img)
    assert np.array_equal(out.pixels, gray)
    expected = (gray[:, :, 0].astype(np.float64) / 255.0 - 0.5) / 0.5
    assert np.array_equal(out.normalized, expected)
    assert out.normalized.min() >= -1.0 and out.normalized.max() <= 1.0


def test_rotate_zero_is_identity():
    img = rgb_image(random_rgb(np.random.default_rng(3), 20, 20))
    out = Rotate(0).apply(img)
    assert images_equal(img, out)


def test_contrast_stretch_identity_on_full_range():
    px = random_rgb(np.random.default_rng(4), 12, 12)
    px[0, 0] = (0, 0, 0)
    px[1, 1] = (255, 255, 255)
    img = rgb_image(px)
    out = ContrastStretch().apply(img)
    assert images_equal(img, out)


def test_background_removal_default_is_identity():
    img = rgb_image(random_rgb(np.random.default_rng(5), 10, 10))
    assert images_equal(BackgroundRemoval().apply(img), img)


def test_apply_stage_checks_compatibility():
    img = rgb_image(solid_image(5, 5, 5))
    with pytest.raises(PipelineError):
        apply_stage(Binarize(mode="fixed", theta=1), img)


def test_semantic_tag_touches_only_annotation(tiny_hierarchy, stub_provider):
    prompts = PromptSet.build(tiny_hierarchy, stub_provider)

    def categorizer(image):
        class _View:
            pixels = image.pixels
            concept_hint = image.concept_hint
            id = None
        bundle = extract_features(_View(), tiny_hierarchy, stub_provider, prompts=prompts)
        return categorize_bundle(bundle, tiny_hierarchy, ScoringWeights(), prompts)

    img = AnnotatedImage(pixels=solid_image(9, 9, 9), concept_hint="cheese")
    out = SemanticTag(categorizer).apply(img)
    assert np.array_equal(out.pixels, img.pixels)
    assert out.semantic is not None
    # pixel stages downstream preserve the annotation
    after = Grayscale("weighted").apply(out)
    assert after.semantic == out.semantic


# -- otsu ---------------------------------------------------------------------

def brute_force_otsu(gray: np.ndarray) -> int:
    """Exhaustive threshold search with exact rational arithmetic."""
    flat = [int(v) for v in np.asarray(gray).ravel()]
    occupied = sorted(set(flat))
    if len(occupied) == 1:
        return occupied[0]
    best_t, best_var = 0, Fraction(-1)
    for t in range(256):
        low = [v for v in flat if v <= t]
        high = [v for v in flat if v > t]
        if not low or not high:
            var = Fraction(0)
        else:
            w0, w1 = Fraction(len(low)), Fraction(len(high))
            mu0 = Fraction(sum(low)) / w0
            mu1 = Fraction(sum(high)) / w1
            var = w0 * w1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_var, best_t = var, t
    return best_t


def test_otsu_half_black_half_white_breaks_tie_to_zero():
    gray = np.concatenate([np.zeros(32, dtype=np.uint8), np.full(32, 255, np.uint8)])
    assert otsu_threshold(gray.reshape(8, 8)) == 0


def test_otsu_constant_image_returns_its_bin_and_binarizes_to_zero():
    gray = np.full((8, 8), 137, dtype=np.uint8)
    theta = otsu_threshold(gray)
    assert theta == 137
    out = Binarize(mode="otsu").apply(AnnotatedImage(pixels=gray[:, :, None]))
    assert np.all(out.pixels == 0)


def test_otsu_matches_brute_force_on_random_images():
    rng = np.random.default_rng(11)
    for _ in range(100):
        gray = rng.integers(0, 256, size=(8, 8)).astype(np.uint8)
        assert otsu_threshold(gray) == brute_force_otsu(gray)


def test_otsu_bimodal_separates_classes():
    rng = np.random.default_rng(12)
    low = rng.integers(10, 40, size=60)
    high = rng.integers(200, 240, size=40)
    gray = np.concatenate([low, high]).astype(np.uint8).reshape(10, 10)
    theta = otsu_threshold(gray)
    assert 39 <= theta < 200


# -- composition laws -----------------------------------------------------------

def _random_pipeline(rng: np.random.Generator) -> Pipeline:
    stages = []
    for _ in range(int(rng.integers(0, 3))):
        pick = rng.integers(3)
        if pick == 0:
            stages.append(Rotate(float(rng.integers(-30, 31))))
        elif pick == 1:
            stages.append(ContrastStretch())
        else:
            stages.append(BackgroundRemoval())
    rw, rh = int(rng.integers(8, 33)), int(rng.integers(8, 33))
    stages.append(Resize(rw, rh))
    if rng.random() < 0.7:
        cw = int(rng.integers(4, rw + 1))
        ch = int(rng.integers(4, rh + 1))
        stages.append(CenterCrop(cw, ch))
    if rng.random() < 0.8:
        stages.append(Grayscale("weighted" if rng.random() < 0.5 else "mean"))
        tail = rng.integers(4)
        if tail == 0:
            stages.append(Binarize(mode="otsu"))
        elif tail == 1:
            stages.append(Binarize(mode="fixed", theta=int(rng.integers(0, 256))))
        elif tail == 2:
            stages.append(Normalize(0.5, 0.5))
    return Pipeline(stages)


def test_functor_laws_on_randomized_pipelines():
    rng = np.random.default_rng(2024)
    for _ in range(300):
        pipeline = _random_pipeline(rng)
        img = rgb_image(random_rgb(rng, int(rng.integers(8, 49)), int(rng.integers(8, 49))))
        split = int(rng.integers(0, len(pipeline.stages) + 1))
        p = Pipeline(pipeline.stages[:split])
        q = Pipeline(pipeline.stages[split:], input_channels=p.output_channels)
        combined = compose(p, q)
        sequential = q.apply(p.apply(img))
        assert images_equal(combined.apply(img), sequential)
        # identity law both sides
        assert images_equal(identity_pipeline().apply(img), img)
        left = compose(identity_pipeline(), pipeline)
        right = compose(pipeline, identity_pipeline(pipeline.output_channels))
        assert images_equal(left.apply(img), combined.apply(img))
        assert images_equal(right.apply(img), combined.apply(img))


def test_compose_associativity():
    rng = np.random.default_rng(77)
    p = Pipeline([Resize(32, 32)])
    q = Pipeline([CenterCrop(28, 28)])
    r = Pipeline([Grayscale("weighted")])
    img = rgb_image(random_rgb(rng, 40, 40))
    a = compose(compose(p, q), r)
    b = compose(p, compose(q, r))
    assert images_equal(a.apply(img), b.apply(img))


def test_compose_rejects_channel_mismatch():
    p = Pipeline([Grayscale("weighted")])
    q = Pipeline([Grayscale("weighted")])
    with pytest.raises(PipelineError, match="cannot compose"):
        compose(p, q)


def test_three_stage_composition_bit_exact_on_many_images():
    rng = np.random.default_rng(123)
    p = Pipeline([Resize(64, 64), CenterCrop(28, 28)])
    q = Pipeline([Grayscale("weighted")])
    combined = compose(p, q)
    for _ in range(100):
        img = rgb_image(random_rgb(rng, int(rng.integers(16, 80)), int(rng.integers(16, 80))))
        assert images_equal(combined.apply(img), q.apply(p.apply(img)))


# -- comparison (natural-transformation view) -----------------------------------

def test_identical_pipelines_have_zero_divergence():
    rng = np.random.default_rng(9)
    p = pipeline_from_config(default_stage_configs()[1:])  # without semantic tag
    inputs = [rgb_image(random_rgb(rng, 32, 32)) for _ in range(5)]
    report = compare_pipelines(p, p, inputs)
    assert report.commutes
    assert report.max_output_delta == 0
    assert all(d == 0 for d in report.stage_deltas)


def test_mean_vs_weighted_grayscale_on_pure_red_diverges_by_9():
    p1 = Pipeline([Grayscale("mean")])
    p2 = Pipeline([Grayscale("weighted")])
    inputs = [rgb_image(solid_image(255, 0, 0, size=8)) for _ in range(3)]
    report = compare_pipelines(p1, p2, inputs)
    assert report.image_deltas == [9, 9, 9]
    assert report.max_output_delta == 9


def test_inserted_identity_stage_keeps_deltas_zero():
    p1 = Pipeline([Resize(16, 16), Grayscale("weighted")])
    p2 = Pipeline([Resize(16, 16), BackgroundRemoval(), Grayscale("weighted")])
    rng = np.random.default_rng(10)
    inputs = [rgb_image(random_rgb(rng, 24, 24)) for _ in range(4)]
    report = compare_pipelines(p1, p2, inputs)
    assert report.image_deltas == [0, 0, 0, 0]
    # stage lists have different lengths, so per-stage deltas become None
    assert report.stage_deltas[-1] is None


# -- dataset-level mapping ---------------------------------------------------------

def test_apply_to_stack_preserves_count_and_matches_per_image():
    rng = np.random.default_rng(31)
    stack = rng.integers(0, 256, size=(6, 28, 28)).astype(np.uint8)
    p = Pipeline([Binarize(mode="fixed", theta=128)], input_channels=1)
    out = apply_to_stack(p, stack)
    assert out.shape == stack.shape
    for i in range(6):
        single = p.apply(AnnotatedImage(pixels=stack[i][:, :, None]))
        assert np.array_equal(out[i], single.pixels[:, :, 0])


def test_pipeline_config_round_trip():
    cfgs = default_stage_configs(size=28, binarize=True)
    p = pipeline_from_config(cfgs[1:])
    assert [s["kind"] for s in p.config()] == [c["kind"] for c in cfgs[1:]]
    with pytest.raises(PipelineError, match="semantic_tag needs a categorizer"):
        pipeline_from_config(cfgs)
    with pytest.raises(PipelineError, match="unknown stage kind"):
        pipeline_from_config([{"kind": "nope"}])
