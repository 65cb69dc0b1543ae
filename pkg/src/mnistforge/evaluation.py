"""Confusion matrices and weighted classification metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassMetrics:
    label: int
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    per_class: tuple[ClassMetrics, ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "per_class": [
                {
                    "label": m.label,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for m in self.per_class
            ],
        }


def confusion(actual, predicted, num_classes: int | None = None) -> np.ndarray:
    """K x K count matrix; rows are actual labels, columns predicted."""
    actual = np.asarray(actual, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if actual.shape != predicted.shape or actual.ndim != 1:
        raise ValueError(
            f"label sequences must be 1-D and equal length "
            f"(got {actual.shape} vs {predicted.shape})"
        )
    if actual.size == 0:
        raise ValueError("need at least one label pair")
    if actual.min() < 0 or predicted.min() < 0:
        raise ValueError("labels must be non-negative")
    k = num_classes if num_classes is not None else int(max(actual.max(), predicted.max())) + 1
    if actual.max() >= k or predicted.max() >= k:
        raise ValueError(f"label out of range for {k} classes")
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (actual, predicted), 1)
    return cm


def compute_metrics(cm: np.ndarray) -> MetricsReport:
    """Accuracy plus support-weighted precision/recall/F1.

    Per-class terms with a zero denominator contribute 0 (logged); weights
    are n_i / n with n_i the true count of class i (row sum).
    """
    cm = np.asarray(cm, dtype=np.int64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ValueError("confusion matrix must be square")
    total = int(cm.sum())
    if total < 1:
        raise ValueError("empty confusion matrix")
    k = cm.shape[0]
    diag = np.diag(cm).astype(np.float64)
    row_sums = cm.sum(axis=1).astype(np.float64)   # actual counts (TP + FN)
    col_sums = cm.sum(axis=0).astype(np.float64)   # predicted counts (TP + FP)

    per_class = []
    weighted_p = weighted_r = weighted_f1 = 0.0
    for i in range(k):
        if col_sums[i] > 0:
            precision = diag[i] / col_sums[i]
        else:
            precision = 0.0
            log.warning("class %d was never predicted; precision set to 0", i)
        recall = diag[i] / row_sums[i] if row_sums[i] > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        weight = row_sums[i] / total
        weighted_p += weight * precision
        weighted_r += weight * recall
        weighted_f1 += weight * f1
        per_class.append(ClassMetrics(
            label=i, precision=float(precision), recall=float(recall),
            f1=float(f1), support=int(row_sums[i]),
        ))
    return MetricsReport(
        accuracy=float(diag.sum() / total),
        weighted_precision=float(weighted_p),
        weighted_recall=float(weighted_r),
        weighted_f1=float(weighted_f1),
        per_class=tuple(per_class),
    )
