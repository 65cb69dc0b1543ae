"""Reward arithmetic and confidence routing for sample curation.

The scalar reward for a curation decision blends four terms:

    lambda1 * confidence + lambda2 * entropy(class distribution)
        + lambda3 * probe accuracy - lambda4 * redundancy

With the default weights (0.4, 0.3, 0.2, 0.1) every valid input lands in
[-0.1, 0.9]. Entropy is Shannon entropy of the kept-class distribution
normalized by ln(K), so a perfectly balanced dataset scores 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..features import mapped_cosine


class CurationAction(enum.IntEnum):
    # numeric order doubles as the argmax tie-break: Keep < Discard < Review
    KEEP = 0
    DISCARD = 1
    REVIEW = 2


class Route(enum.Enum):
    AUTO_CATEGORIZE = "auto_categorize"
    HUMAN_REVIEW = "human_review"
    AUTO_REMOVE = "auto_remove"


AUTO_THRESHOLD = 0.85
REMOVE_THRESHOLD = 0.4


@dataclass(frozen=True)
class RewardWeights:
    lambda1: float = 0.4
    lambda2: float = 0.3
    lambda3: float = 0.2
    lambda4: float = 0.1

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def bounds(self) -> tuple[float, float]:
        """(min, max) attainable reward for valid inputs."""
        return (-self.lambda4, self.lambda1 + self.lambda2 + self.lambda3)


def class_entropy(counts: Sequence[int]) -> float:
    """Shannon entropy of a class-count distribution, normalized by ln(K)."""
    arr = np.asarray(list(counts), dtype=np.float64)
    if arr.size == 0 or np.any(arr < 0):
        raise ValueError("counts must be a non-empty sequence of non-negative integers")
    total = float(arr.sum())
    if total < 1:
        raise ValueError("empty distribution")
    k = arr.size
    if k == 1:
        return 0.0
    p = arr[arr > 0] / total
    entropy = float(-(p * np.log(p)).sum())
    return entropy / math.log(k) + 0.0  # normalize -0.0 for degenerate cases


def redundancy(embedding: np.ndarray, kept: Sequence[np.ndarray]) -> float:
    """Max mapped cosine against already-kept embeddings; 0 with nothing kept."""
    if len(kept) == 0:
        return 0.0
    return max(mapped_cosine(embedding, k) for k in kept)


def compute_reward(conf: float, counts: Sequence[int], model_acc: float,
                   red: float, w: RewardWeights = RewardWeights()) -> float:
    for name, v in (("conf", conf), ("model_acc", model_acc), ("red", red)):
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"{name}={v} outside [0,1]")
    entropy = class_entropy(counts)
    return w.lambda1 * conf + w.lambda2 * entropy + w.lambda3 * model_acc - w.lambda4 * red


def route_confidence(conf: float, auto_threshold: float = AUTO_THRESHOLD,
                     remove_threshold: float = REMOVE_THRESHOLD) -> Route:
    """Partition [0,1]: strictly above auto -> auto, below remove -> remove,
    the closed middle band -> human review."""
    if not (0.0 <= conf <= 1.0):
        raise ValueError(f"confidence {conf} outside [0,1]")
    if conf > auto_threshold:
        return Route.AUTO_CATEGORIZE
    if conf < remove_threshold:
        return Route.AUTO_REMOVE
    return Route.HUMAN_REVIEW
