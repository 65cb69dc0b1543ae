"""Lightweight held-out-accuracy probe feeding the reward's ModelAcc term."""

from __future__ import annotations

import logging
import warnings

import numpy as np

log = logging.getLogger(__name__)

NEUTRAL_ACCURACY = 0.5
MIN_PER_CLASS = 5
DEFAULT_RETRAIN_EVERY = 50  # kept samples between probe refreshes


def train_probe(images: np.ndarray, labels: np.ndarray, seed: int = 0,
                test_fraction: float = 0.2) -> float:
    """Multinomial logistic regression on flattened pixels; held-out accuracy.

    Returns the neutral 0.5 (with a warning) when fewer than two classes are
    present or any class has fewer than MIN_PER_CLASS samples.
    """
    labels = np.asarray(labels)
    images = np.asarray(images)
    n = len(labels)
    if n != len(images):
        raise ValueError("images/labels length mismatch")
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) < 2 or counts.min() < MIN_PER_CLASS:
        log.warning(
            "probe needs >=2 classes with >=%d samples each (got %s); "
            "returning neutral %.1f", MIN_PER_CLASS,
            dict(zip(classes.tolist(), counts.tolist())), NEUTRAL_ACCURACY,
        )
        return NEUTRAL_ACCURACY

    from sklearn.linear_model import LogisticRegression

    x = images.reshape(n, -1).astype(np.float64) / 255.0
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_test = max(1, int(round(test_fraction * n)))
    test_idx, train_idx = order[:n_test], order[n_test:]
    if len(np.unique(labels[train_idx])) < 2:
        log.warning("train split collapsed to one class; returning neutral %.1f",
                    NEUTRAL_ACCURACY)
        return NEUTRAL_ACCURACY
    model = LogisticRegression(max_iter=200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # lbfgs convergence chatter on tiny batches
        model.fit(x[train_idx], labels[train_idx])
    return float(model.score(x[test_idx], labels[test_idx]))
