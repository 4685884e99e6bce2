"""K-means anchors: greedy k-means++ seeding, Lloyd iterations, empty-cluster repair."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Rng, as_data_matrix
from .pca import fit_pca, transform

PREREDUCE_THRESHOLD = 50
PREREDUCE_DIM = 50


@dataclass(frozen=True)
class Anchors:
    centers: np.ndarray
    assignment: np.ndarray
    counts: np.ndarray
    wcss_history: list = field(default_factory=list)
    n_iter: int = 0

    @property
    def n_anchors(self):
        return self.centers.shape[0]


def heuristic_C(N):
    """Anchor count that grows with sample size: ``max(1, min(N // 500, 100))``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return max(1, min(int(N) // 500, 100))


def _sq_dists(X, centers, x_sq=None):
    if x_sq is None:
        x_sq = np.einsum("ij,ij->i", X, X)
    c_sq = np.einsum("ij,ij->i", centers, centers)
    d = x_sq[:, None] - 2.0 * (X @ centers.T) + c_sq[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _assign(X, centers, x_sq=None):
    d = _sq_dists(X, centers, x_sq)
    labels = np.argmin(d, axis=1)
    return labels, d[np.arange(X.shape[0]), labels]


def _repair_empty(X, centers, labels, mind, n_clusters):
    """Move the worst-fit point into each empty cluster."""
    counts = np.bincount(labels, minlength=n_clusters)
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return labels, mind, centers
    labels = labels.copy()
    mind = mind.copy()
    centers = centers.copy()
    for c in empty:
        movable = counts[labels] > 1
        cost = np.where(movable, mind, -1.0)
        i = int(np.argmax(cost))
        counts[labels[i]] -= 1
        counts[c] += 1
        labels[i] = c
        mind[i] = 0.0
        centers[c] = X[i]
    return labels, mind, centers


def _means(X, labels, n_clusters):
    counts = np.bincount(labels, minlength=n_clusters).astype(np.float64)
    sums = np.zeros((n_clusters, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / counts[:, None]


def _plusplus(X, n_clusters, rng, x_sq, n_trials=None):
    """Greedy k-means++ seeding.

    Each new center is the best of ``n_trials`` D²-weighted candidates
    (default ``2 + floor(ln C)``), judged by the resulting potential.
    ``n_trials=1`` is plain k-means++.
    """
    n = X.shape[0]
    if n_trials is None:
        n_trials = 2 + int(np.log(n_clusters))
    centers = np.empty((n_clusters, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    closest = _sq_dists(X, centers[:1], x_sq)[:, 0]
    for c in range(1, n_clusters):
        candidates = [rng.choice_weighted(closest) for _ in range(n_trials)]
        d = _sq_dists(X, X[candidates], x_sq)
        trial = np.minimum(closest[:, None], d)
        best = int(np.argmin(trial.sum(axis=0)))
        centers[c] = X[candidates[best]]
        closest = trial[:, best]
    return centers


def _wcss(X, centers, labels):
    diff = X - centers[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def kmeans_fit(X, C, seed=0, max_iter=100, tol=1e-6, n_trials=None):
    """Lloyd's algorithm from greedy k-means++ seeding.

    Stops when no center moves more than ``tol`` or after ``max_iter``
    iterations.  Empty clusters are refilled with the point farthest from
    its center, so every returned cluster has at least one member.
    """
    X = as_data_matrix(X)
    n = X.shape[0]
    C = int(C)
    if C < 1:
        raise ValueError(f"C must be >= 1, got {C}")
    if C > n:
        raise ValueError(f"C ({C}) exceeds the number of points ({n})")
    rng = Rng(seed)
    x_sq = np.einsum("ij,ij->i", X, X)
    centers = _plusplus(X, C, rng, x_sq, n_trials)
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        labels, mind = _assign(X, centers, x_sq)
        labels, mind, centers = _repair_empty(X, centers, labels, mind, C)
        history.append(_wcss(X, centers, labels))
        new_centers = _means(X, labels, C)
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        if shift < tol:
            break
    labels, mind = _assign(X, centers, x_sq)
    labels, mind, centers = _repair_empty(X, centers, labels, mind, C)
    history.append(_wcss(X, centers, labels))
    counts = np.bincount(labels, minlength=C)
    return Anchors(centers, labels.astype(np.int64), counts, history, n_iter)


def maybe_prereduce(X, threshold_D=PREREDUCE_THRESHOLD, n_components=PREREDUCE_DIM, seed=0):
    """PCA-project ``X`` for clustering when it has more than ``threshold_D`` columns."""
    X = as_data_matrix(X)
    if X.shape[1] <= threshold_D:
        return X
    q = min(n_components, X.shape[1], X.shape[0])
    return transform(fit_pca(X, q, seed=seed), X)


def lift_centers(X, assignment, C):
    """Per-cluster means of the original rows."""
    return _means(as_data_matrix(X), np.asarray(assignment), C)


def fit_anchors(X, C, seed=0, threshold_D=PREREDUCE_THRESHOLD, max_iter=100, tol=1e-6):
    """Anchors in the input space, clustering on a PCA projection when ``X`` is wide."""
    X = as_data_matrix(X)
    Z = maybe_prereduce(X, threshold_D, seed=seed)
    anchors = kmeans_fit(Z, C, seed=seed, max_iter=max_iter, tol=tol)
    if Z is X:
        return anchors
    centers = lift_centers(X, anchors.assignment, C)
    return Anchors(centers, anchors.assignment, anchors.counts, anchors.wcss_history,
                   anchors.n_iter)
