"""Shared builders used by both the unit tests and the acceptance suite."""

import numpy as np

from mnistforge.transforms import (
    BackgroundRemoval,
    Binarize,
    CenterCrop,
    ContrastStretch,
    Grayscale,
    Normalize,
    Pipeline,
    Resize,
    Rotate,
)


def random_pipeline(rng: np.random.Generator) -> Pipeline:
    """A random channel-consistent stage chain over RGB input."""
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
        stages.append(CenterCrop(int(rng.integers(4, rw + 1)),
                                 int(rng.integers(4, rh + 1))))
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


def hinted_records(concepts: list[str], per_concept: int, seed: int = 0,
                   size: int = 16):
    """Unique-pixel records hinted with the given concepts, round-robin."""
    from conftest import make_record

    rng = np.random.default_rng(seed)
    records = []
    for concept in concepts:
        for _ in range(per_concept):
            pixels = rng.integers(0, 256, size=(size, size, 3)).astype(np.uint8)
            records.append(make_record(pixels, concept_hint=concept))
    return records
