"""Embedding quality: leave-one-out kNN accuracy and distance correlation."""
from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .core import DimensionError, Rng, as_data_matrix
from .knn_graph import build_knn

DEFAULT_MAX_PAIRS = 5_000_000
CSV_FIELDS = ("method", "dataset", "seed", "knn_accuracy", "distance_correlation",
              "elapsed_seconds")


@dataclass
class MetricReport:
    knn_accuracy: float
    distance_correlation: float
    n_pairs_sampled: int
    elapsed_seconds: float

    def to_json(self):
        return json.dumps(asdict(self))

    def csv_row(self, method, dataset, seed):
        values = (method, dataset, seed, repr(float(self.knn_accuracy)),
                  repr(float(self.distance_correlation)), repr(float(self.elapsed_seconds)))
        return ",".join(str(v) for v in values)


def population_sd(values):
    """Population standard deviation; exactly 0 for identical values, NaN if any is NaN."""
    values = [float(v) for v in values]
    if not values or any(math.isnan(v) for v in values):
        return float("nan")
    return statistics.pstdev(values)


def _vote(neighbor_labels):
    # majority vote; among tied labels the one seen first (nearest) wins
    labels, first, counts = np.unique(neighbor_labels, return_index=True, return_counts=True)
    best = counts.max()
    tied = np.flatnonzero(counts == best)
    return labels[tied[np.argmin(first[tied])]]


def knn_accuracy(Y, labels, k=5):
    """Fraction of points whose k nearest embedded neighbors vote for their label."""
    Y = as_data_matrix(Y, "Y")
    labels = np.asarray(labels)
    n = Y.shape[0]
    if labels.shape[0] != n:
        raise DimensionError(f"{labels.shape[0]} labels for {n} points")
    if k >= n:
        raise ValueError(f"k ({k}) must be smaller than the number of points ({n})")
    if np.unique(labels).size < 2:
        raise ValueError("need at least two distinct labels")
    ids = build_knn(Y, k).neighbor_ids
    votes = labels[ids]
    pred = np.empty(n, dtype=labels.dtype)
    for i in range(n):
        pred[i] = _vote(votes[i])
    return float(np.mean(pred == labels))


def _sample_pairs(n, count, seed):
    rng = Rng(seed)
    i = np.empty(0, dtype=np.int64)
    j = np.empty(0, dtype=np.int64)
    while i.size < count:
        need = count - i.size
        a = rng.integers(n, need)
        b = rng.integers(n, need)
        keep = a != b
        i = np.concatenate([i, np.minimum(a, b)[keep]])
        j = np.concatenate([j, np.maximum(a, b)[keep]])
    return i, j


def _pair_distances(M, i, j, block=1_000_000):
    out = np.empty(i.size)
    for s in range(0, i.size, block):
        diff = M[i[s:s + block]] - M[j[s:s + block]]
        out[s:s + block] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def _pearson(u, v):
    u = u - u.mean()
    v = v - v.mean()
    su = float(np.dot(u, u))
    sv = float(np.dot(v, v))
    if su == 0.0 or sv == 0.0:
        raise ValueError("a distance vector has zero variance")
    r = float(np.dot(u, v)) / float(np.sqrt(su) * np.sqrt(sv))
    return min(1.0, max(-1.0, r))


def distance_correlation(X, Y, max_pairs=DEFAULT_MAX_PAIRS, seed=0, return_pairs=False):
    """Pearson correlation between pairwise distances in ``X`` and in ``Y``.

    Uses every pair ``i < j`` when there are at most ``max_pairs``;
    otherwise a seeded uniform sample of ``max_pairs`` pairs.
    """
    X = as_data_matrix(X, "X")
    Y = as_data_matrix(Y, "Y")
    n = X.shape[0]
    if Y.shape[0] != n:
        raise DimensionError(f"X has {n} rows but Y has {Y.shape[0]}")
    if n < 3:
        raise ValueError("need at least 3 points")
    total = n * (n - 1) // 2
    if total <= max_pairs:
        dx, dy = pdist(X), pdist(Y)
        used = total
    else:
        i, j = _sample_pairs(n, int(max_pairs), seed)
        dx, dy = _pair_distances(X, i, j), _pair_distances(Y, i, j)
        used = int(max_pairs)
    r = _pearson(dx, dy)
    return (r, used) if return_pairs else r


def evaluate(X, Y, labels=None, k=5, max_pairs=DEFAULT_MAX_PAIRS, seed=0):
    """Both metrics in a MetricReport; ``knn_accuracy`` is NaN without labels."""
    start = time.perf_counter()
    acc = knn_accuracy(Y, labels, k) if labels is not None else float("nan")
    dc, used = distance_correlation(X, Y, max_pairs=max_pairs, seed=seed, return_pairs=True)
    return MetricReport(acc, dc, used, time.perf_counter() - start)
