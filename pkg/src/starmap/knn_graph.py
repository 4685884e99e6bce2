"""Fuzzy k-nearest-neighbor graph.

Pipeline: exact kNN scan -> per-point (rho, sigma) calibration ->
directed membership weights -> fuzzy union into a symmetric graph.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _backend
from .core import as_data_matrix

SMOOTH_K_TOLERANCE = 1e-5
MIN_K_DIST_SCALE = 1e-3
MAX_SIGMA = 1e3
_SIGMA_FLOOR = 1e-12
_BISECT_ITERS = 200


@dataclass(frozen=True)
class KnnIndex:
    k: int
    neighbor_ids: np.ndarray
    neighbor_dists: np.ndarray

    @property
    def n(self):
        return self.neighbor_ids.shape[0]


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric fuzzy graph stored once per unordered pair (``rows < cols``)."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    degree: np.ndarray

    @property
    def n_edges(self):
        return self.weights.shape[0]

    def to_dense(self):
        W = np.zeros((self.n, self.n))
        W[self.rows, self.cols] = self.weights
        W[self.cols, self.rows] = self.weights
        return W

    def directed_edges(self):
        """Both orientations of every edge as ``(head, tail, weight)``.

        Sorted by head then tail so each point's outgoing edges are
        contiguous.
        """
        head = np.concatenate([self.rows, self.cols])
        tail = np.concatenate([self.cols, self.rows])
        w = np.concatenate([self.weights, self.weights])
        order = np.lexsort((tail, head))
        return head[order], tail[order], w[order]

    @classmethod
    def from_dense(cls, W, rho=None, sigma=None):
        """Build from a symmetric dense matrix; the diagonal is ignored."""
        W = np.asarray(W, dtype=np.float64)
        n = W.shape[0]
        if W.shape != (n, n):
            raise ValueError("W must be square")
        if not np.allclose(W, W.T, rtol=0, atol=0):
            raise ValueError("W must be symmetric")
        iu, ju = np.triu_indices(n, k=1)
        w = W[iu, ju]
        keep = w > 0
        rows, cols, w = iu[keep], ju[keep], w[keep]
        degree = _degrees(n, rows, cols, w)
        rho = np.zeros(n) if rho is None else np.asarray(rho, dtype=np.float64)
        sigma = np.ones(n) if sigma is None else np.asarray(sigma, dtype=np.float64)
        return cls(n, rows.astype(np.int64), cols.astype(np.int64), w, rho, sigma, degree)

    def write_csv(self, path):
        """Debug dump, one ``i,j,w`` line per stored edge."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("i,j,w\n")
            for i, j, w in zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()):
                fh.write(f"{i},{j},{w!r}\n")


def _degrees(n, rows, cols, w):
    return np.bincount(rows, weights=w, minlength=n) + np.bincount(cols, weights=w, minlength=n)


def build_knn(X, k, backend=None):
    """Exact k nearest neighbors of every row of ``X`` (self excluded).

    Ties in distance go to the smaller index.
    """
    X = as_data_matrix(X)
    n = X.shape[0]
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= n:
        raise ValueError(f"k must be < number of points ({n}), got {k}")
    kern = _backend.get_kernels(backend)
    threads = _backend.thread_count() if kern is not _backend._fallback else 1
    ids, sqd = kern.knn_scan(X, k, threads)
    return KnnIndex(k, np.asarray(ids, dtype=np.int64), np.sqrt(np.asarray(sqd)))


def _calibrate_rows(dists, target):
    dists = np.asarray(dists, dtype=np.float64)
    rho = dists[:, 0].copy()
    shifted = np.maximum(dists - rho[:, None], 0.0)
    lo_bound = np.maximum(MIN_K_DIST_SCALE * dists.mean(axis=1), _SIGMA_FLOOR)
    hi_bound = np.maximum(MAX_SIGMA, lo_bound)

    def psum(sig, rows=slice(None)):
        return np.exp(-shifted[rows] / sig[:, None]).sum(axis=1)

    f_lo = psum(lo_bound)
    f_hi = psum(hi_bound)
    sigma = np.where(f_lo >= target, lo_bound, hi_bound)
    active = np.flatnonzero((f_lo < target) & (f_hi > target))
    lo = lo_bound[active].copy()
    hi = hi_bound[active].copy()
    mid = np.sqrt(lo * hi)
    for _ in range(_BISECT_ITERS):
        if active.size == 0:
            break
        mid = np.sqrt(lo * hi)
        resid = psum(mid, active) - target
        done = np.abs(resid) <= SMOOTH_K_TOLERANCE
        sigma[active[done]] = mid[done]
        low = resid < 0
        lo = np.where(low, mid, lo)
        hi = np.where(low, hi, mid)
        keep = ~done
        active, lo, hi, mid = active[keep], lo[keep], hi[keep], mid[keep]
    if active.size:
        sigma[active] = mid
    return rho, sigma


def smooth_knn_calibrate(dists_i, k=None, target=None):
    """Local scale for one point.

    Returns ``(rho, sigma)`` where ``rho`` is the nearest-neighbor distance
    and ``sigma`` solves ``sum(exp(-max(0, d - rho) / sigma)) == target``
    (default ``log2(k)``), clamped to ``[1e-3 * mean(d), 1e3]``.
    """
    d = np.asarray(dists_i, dtype=np.float64).ravel()
    if d.size == 0:
        raise ValueError("dists_i is empty")
    if k is None:
        k = d.size
    if target is None:
        target = math.log2(k)
    rho, sigma = _calibrate_rows(d[None, :], float(target))
    return float(rho[0]), float(sigma[0])


def calibrate(index, target=None):
    """Vectorized ``smooth_knn_calibrate`` over every row of a KnnIndex."""
    if target is None:
        target = math.log2(index.k)
    return _calibrate_rows(index.neighbor_dists, float(target))


def directed_weights(index, rho, sigma):
    """Membership of each listed neighbor, ``exp(-max(0, d - rho) / sigma)``.

    The nearest neighbor always gets exactly 1.  Very distant neighbors may
    underflow to 0; those are dropped by ``fuzzy_union``.
    """
    rho = np.asarray(rho, dtype=np.float64)[:, None]
    sigma = np.asarray(sigma, dtype=np.float64)[:, None]
    return np.exp(-np.maximum(index.neighbor_dists - rho, 0.0) / sigma)


def union(a, b):
    """Probabilistic t-conorm ``a + b - a*b``."""
    return a + b - a * b


def fuzzy_union(index, weights, rho=None, sigma=None):
    """Symmetrize directed weights into a FuzzyGraph."""
    n, k = index.neighbor_ids.shape
    rows = np.repeat(np.arange(n), k)
    P = sp.csr_matrix(
        (np.asarray(weights, dtype=np.float64).ravel(), (rows, index.neighbor_ids.ravel())),
        shape=(n, n),
    )
    P.eliminate_zeros()
    PT = P.T.tocsr()
    W = (P + PT - P.multiply(PT)).tocoo()
    upper = (W.row < W.col) & (W.data > 0)
    r, c, w = W.row[upper].astype(np.int64), W.col[upper].astype(np.int64), W.data[upper]
    order = np.lexsort((c, r))
    r, c, w = r[order], c[order], np.minimum(w[order], 1.0)
    rho = np.zeros(n) if rho is None else np.asarray(rho, dtype=np.float64)
    sigma = np.ones(n) if sigma is None else np.asarray(sigma, dtype=np.float64)
    return FuzzyGraph(n, r, c, w, rho, sigma, _degrees(n, r, c, w))


def build_fuzzy_graph(X, k, backend=None):
    """kNN scan, calibration, directed weights and union in one call."""
    index = build_knn(X, k, backend=backend)
    rho, sigma = calibrate(index)
    weights = directed_weights(index, rho, sigma)
    return fuzzy_union(index, weights, rho, sigma), index
