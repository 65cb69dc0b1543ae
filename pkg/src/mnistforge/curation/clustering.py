"""Greedy average-link clustering of embeddings on mapped cosine similarity.

Used by fast-batch processing: one human decision per cluster instead of one
per image. Merging repeats while some cluster pair's average pairwise mapped
cosine reaches the threshold; ties prefer the lexicographically smallest
pair, so results are deterministic given input order.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def cluster_embeddings(embeddings: Sequence[np.ndarray],
                       sim_threshold: float) -> list[list[int]]:
    """Cluster unit vectors; returns member-index lists, largest cluster first.

    Average linkage over mapped cosine has a closed form: with S_A the vector
    sum of cluster A, the mean pairwise cosine between A and B is
    (S_A . S_B) / (|A| |B|), and the mapped value is (that + 1) / 2.
    """
    if not (0.0 <= sim_threshold <= 1.0):
        raise ValueError(f"threshold {sim_threshold} outside [0,1]")
    n = len(embeddings)
    if n == 0:
        return []
    sums = [np.asarray(e, dtype=np.float64).copy() for e in embeddings]
    members: list[list[int]] = [[i] for i in range(n)]

    while len(members) > 1:
        k = len(members)
        mat = np.stack(sums)
        counts = np.asarray([len(m) for m in members], dtype=np.float64)
        avg_cos = (mat @ mat.T) / np.outer(counts, counts)
        sim = (avg_cos + 1.0) / 2.0
        np.fill_diagonal(sim, -np.inf)
        best = float(sim.max())
        if best < sim_threshold:
            break
        # smallest (i, j) among the maxima keeps merging deterministic
        i, j = np.unravel_index(int(np.argmax(sim)), (k, k))
        i, j = int(min(i, j)), int(max(i, j))
        sums[i] = sums[i] + sums[j]
        members[i] = members[i] + members[j]
        del sums[j], members[j]

    for m in members:
        m.sort()
    members.sort(key=lambda m: (-len(m), m[0]))
    return members
