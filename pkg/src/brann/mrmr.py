"""Minimum-redundancy maximum-relevance ranking over discretized features.

Mutual information is the plug-in estimate from joint histograms of
equal-frequency bin labels, in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def default_bins(n: int) -> int:
    return max(2, int(math.isqrt(n)))


def discretize(column, bins: int) -> np.ndarray:
    """Equal-frequency labels in ``0..bins-1``; values equal to an edge go to the lower bin."""
    x = np.asarray(column, dtype=float).reshape(-1)
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if bins > x.size:
        raise ValueError(f"bins ({bins}) exceeds sample count ({x.size})")
    s = np.sort(x)
    n = x.size
    edges = s[[math.ceil(b * n / bins) - 1 for b in range(1, bins)]]
    return np.searchsorted(edges, x, side="left").astype(int)


def entropy(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        raise ValueError("empty input")
    _, counts = np.unique(a, return_counts=True)
    p = counts / a.size
    return float(-np.sum(p * np.log(p)))


def mutual_information(a, b) -> float:
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    if a.size != b.size:
        raise ValueError("length mismatch")
    if a.size == 0:
        raise ValueError("empty input")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    joint /= a.size
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])))
    return max(mi, 0.0)


@dataclass(frozen=True)
class MRMRRanking:
    order: tuple[int, ...]
    # score of each feature (by feature index) at the moment it was selected
    scores: tuple[float, ...]
    relevance: tuple[float, ...]
    weights: tuple[float, ...]


def rank_features(X, y, bins: int | None = None, criterion: str = "MID") -> MRMRRanking:
    """Greedy mRMR ranking of every column of ``X``.

    ``criterion`` is ``"MID"`` (relevance minus mean redundancy) or ``"MIQ"``
    (relevance divided by mean redundancy). Ties go to the lower index.
    Weights are relevances normalized to sum to one.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, d = X.shape
    if d < 1:
        raise ValueError("need at least one feature")
    if y.size != n:
        raise ValueError("X and y have different row counts")
    bins = default_bins(n) if bins is None else bins
    criterion = criterion.upper()
    if criterion not in ("MID", "MIQ"):
        raise ValueError(f"unknown criterion {criterion!r}")
    yl = discretize(y, bins)
    if np.unique(yl).size < 2:
        raise ValueError("degenerate target: a single label after discretization")
    labels = [discretize(X[:, j], bins) for j in range(d)]
    relevance = np.array([mutual_information(f, yl) for f in labels])

    selected: list[int] = []
    scores = np.zeros(d)
    redundancy_sum = np.zeros(d)
    remaining = list(range(d))
    while remaining:
        if not selected:
            cand = relevance[remaining]
        else:
            mean_red = redundancy_sum[remaining] / len(selected)
            if criterion == "MID":
                cand = relevance[remaining] - mean_red
            else:
                cand = relevance[remaining] / (mean_red + 1e-12)
        pick = remaining[int(np.argmax(cand))]
        scores[pick] = float(np.max(cand))
        selected.append(pick)
        remaining.remove(pick)
        for j in remaining:
            redundancy_sum[j] += mutual_information(labels[j], labels[pick])

    total = relevance.sum()
    weights = relevance / total if total > 0 else np.zeros(d)
    return MRMRRanking(tuple(selected), tuple(float(s) for s in scores),
                       tuple(float(r) for r in relevance), tuple(float(w) for w in weights))


RANKING_HEADER = ("rank", "feature", "score", "weight")


def ranking_rows(ranking: MRMRRanking, feature_names) -> list[tuple]:
    return [(r + 1, feature_names[j], ranking.scores[j], ranking.weights[j])
            for r, j in enumerate(ranking.order)]
