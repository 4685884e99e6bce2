"""Edge-sampled SGD under neighbor attraction, repulsion and star attraction.

Pairwise forces all have the form ``coeff * (y_i - y_j)``.  Attraction
coefficients are negative (pull ``y_i`` toward ``y_j``), repulsion
coefficients positive.  Every coefficient is clipped to ``[-clip, clip]``
before it multiplies the displacement.

The dense ``loss`` / ``full_gradient`` pair is the exact objective and its
negative gradient; they are used to check the force formulas, never by the
SGD loop.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import _backend
from .core import Rng, as_data_matrix

log = logging.getLogger(__name__)

MODES = ("umap", "starmap")
_V_CLAMP = 1e-12


class OptimizationError(RuntimeError):
    """Raised when the embedding becomes non-finite."""


@dataclass(frozen=True)
class Hyperparams:
    a: float = 1.577
    b: float = 0.895
    lam: float = 0.1
    k: int = 20
    q: int = 2
    n_epochs: Optional[int] = None
    negative_sample_rate: int = 5
    initial_lr: float = 1.0
    clip: float = 0.4
    eps: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not self.a > 0 or not self.b > 0:
            raise ValueError("a and b must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.clip > 0:
            raise ValueError("clip must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.k < 1 or self.q < 1:
            raise ValueError("k and q must be >= 1")
        if self.n_epochs is not None and self.n_epochs < 1:
            raise ValueError("n_epochs must be >= 1")
        if self.negative_sample_rate < 0:
            raise ValueError("negative_sample_rate must be >= 0")
        if not self.initial_lr > 0:
            raise ValueError("initial_lr must be positive")

    def epochs_for(self, n):
        if self.n_epochs is not None:
            return self.n_epochs
        return 500 if n <= 10_000 else 200


@dataclass
class EmbeddingState:
    Y: np.ndarray
    S: Optional[np.ndarray] = None
    assignment: Optional[np.ndarray] = None
    epoch: int = 0


# -- pairwise terms ---------------------------------------------------------

def clip_coeff(c, clip):
    return min(max(c, -clip), clip)


def similarity(y_i, y_j, a, b):
    """Low-dimensional similarity ``1 / (1 + a * ||y_i - y_j||^(2b))``."""
    diff = np.asarray(y_i, dtype=np.float64) - np.asarray(y_j, dtype=np.float64)
    d2 = float(np.dot(diff, diff))
    return 1.0 / (1.0 + a * math.pow(d2, b))


def attraction_coefficient(d2, w, a, b, eps):
    return (-2.0 * a * b * math.pow(max(d2, eps * eps), b - 1.0)) / (1.0 + a * math.pow(d2, b)) * w


def repulsion_coefficient(d2, w, a, b, eps):
    return (2.0 * b / max(d2, eps * eps)) / (1.0 + a * math.pow(d2, b)) * (1.0 - w)


def star_coefficient(d2, degree, a, b, eps):
    return attraction_coefficient(d2, 1.0, a, b, eps) * degree


def _pair(y_i, y_j):
    y_i = np.asarray(y_i, dtype=np.float64)
    y_j = np.asarray(y_j, dtype=np.float64)
    diff = y_i - y_j
    return diff, float(np.dot(diff, diff))


def attraction_term(y_i, y_j, w_ij, a, b, eps=1e-3, clip=None):
    """Pull on ``y_i`` from neighbor ``y_j`` with membership ``w_ij``."""
    diff, d2 = _pair(y_i, y_j)
    c = attraction_coefficient(d2, w_ij, a, b, eps)
    if clip is not None:
        c = clip_coeff(c, clip)
    return c * diff


def repulsion_term(y_i, y_j, w_ij, a, b, eps=1e-3, clip=None, rng=None):
    """Push on ``y_i`` away from ``y_j``.

    For coincident points the direction is a random unit vector drawn from
    ``rng`` (a fresh ``Rng(0)`` if omitted).
    """
    diff, d2 = _pair(y_i, y_j)
    c = repulsion_coefficient(d2, w_ij, a, b, eps)
    if clip is not None:
        c = clip_coeff(c, clip)
    if d2 == 0.0 and c != 0.0:
        rng = rng or Rng(0)
        while True:
            u = 2.0 * rng.random(diff.shape[0]) - 1.0
            norm = float(np.sqrt(np.dot(u, u)))
            if norm > 0.0:
                return c * (u / norm)
    return c * diff


def star_term(y_i, s, d_i, a, b, eps=1e-3, clip=None):
    """Pull of ``y_i`` toward its star ``s``, proportional to the degree ``d_i``."""
    diff, d2 = _pair(y_i, s)
    c = star_coefficient(d2, d_i, a, b, eps)
    if clip is not None:
        c = clip_coeff(c, clip)
    return c * diff


# -- dense objective ----------------------------------------------------------

def _dense_weights(graph):
    W = graph.to_dense() if hasattr(graph, "to_dense") else np.asarray(graph, dtype=np.float64)
    W = W.copy()
    np.fill_diagonal(W, 0.0)
    return W


def _pairwise_sq(Y):
    diff = Y[:, None, :] - Y[None, :, :]
    return diff, np.einsum("ijk,ijk->ij", diff, diff)


def loss(Y, graph, params):
    """Fuzzy set cross-entropy summed over ordered pairs ``i != j``.

    ``graph`` is a FuzzyGraph or a dense symmetric weight matrix.
    """
    Y = as_data_matrix(Y, "Y")
    W = _dense_weights(graph)
    _, d2 = _pairwise_sq(Y)
    v = 1.0 / (1.0 + params.a * np.power(d2, params.b))
    v = np.clip(v, _V_CLAMP, 1.0 - _V_CLAMP)
    terms = W * np.log(v) + (1.0 - W) * np.log(1.0 - v)
    np.fill_diagonal(terms, 0.0)
    return float(-terms.sum())


def full_gradient(Y, graph, params):
    """Negative gradient of ``loss`` for every point, no sampling or clipping.

    Each unordered pair appears twice in the ordered-pair loss, so the
    result is twice the per-point sum of attraction and repulsion terms.
    """
    Y = as_data_matrix(Y, "Y")
    W = _dense_weights(graph)
    a, b, eps = params.a, params.b, params.eps
    diff, d2 = _pairwise_sq(Y)
    g = np.maximum(d2, eps * eps)
    v = 1.0 / (1.0 + a * np.power(d2, b))
    coeff = -2.0 * a * b * np.power(g, b - 1.0) * v * W + (2.0 * b / g) * v * (1.0 - W)
    np.fill_diagonal(coeff, 0.0)
    return 2.0 * np.einsum("ij,ijk->ik", coeff, diff)


# -- SGD ------------------------------------------------------------------------

def make_epoch_schedule(graph):
    """Directed edge list and per-edge sampling period ``max(w) / w``."""
    head, tail, w = graph.directed_edges()
    if w.size == 0:
        raise ValueError("graph has no edges")
    epochs_per_sample = w.max() / w
    return (np.ascontiguousarray(head, dtype=np.int64),
            np.ascontiguousarray(tail, dtype=np.int64),
            np.ascontiguousarray(epochs_per_sample, dtype=np.float64))


def _write_snapshot(path_template, epoch, Y):
    path = str(path_template).format(epoch=epoch)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(f"y{d}" for d in range(Y.shape[1])) + "\n")
        for row in Y.tolist():
            fh.write(",".join(repr(x) for x in row) + "\n")


def optimize(state, graph, params, mode="starmap", *, deterministic=True,
             callback: Optional[Callable[[int, np.ndarray], None]] = None,
             snapshot_every=None, snapshot_path=None, backend=None):
    """Run the SGD schedule and return a new EmbeddingState.

    ``mode='umap'`` uses neighbor attraction and repulsion only.
    ``mode='starmap'`` blends each sampled attraction with a pull toward
    the endpoint's star, weighted ``lam`` vs ``1 - lam``.  Stars are never
    written.

    ``callback(epoch, Y)`` runs after each epoch with the number of epochs
    completed so far; ``Y`` is the live array
    and must not be modified.  With ``snapshot_every`` set, ``Y`` is
    written to ``snapshot_path.format(epoch=...)`` every that many epochs.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    Y = np.array(as_data_matrix(state.Y, "Y"), dtype=np.float64, order="C", copy=True)
    n, q = Y.shape
    if graph.n != n:
        raise ValueError(f"graph has {graph.n} points but Y has {n}")
    use_stars = mode == "starmap"
    if use_stars:
        if state.S is None or state.assignment is None:
            raise ValueError("starmap mode needs stars and an assignment")
        S = state.S
        if S.dtype != np.float64 or not S.flags.c_contiguous:
            raise ValueError("stars must be a C-contiguous float64 array")
        if S.shape[1] != q:
            raise ValueError(f"stars have {S.shape[1]} columns but Y has {q}")
        assignment = np.ascontiguousarray(state.assignment, dtype=np.int64)
        if assignment.shape != (n,) or assignment.min() < 0 or assignment.max() >= S.shape[0]:
            raise ValueError("assignment must map every point to a star index")
        lam = float(params.lam)
    else:
        S = np.zeros((1, q))
        assignment = np.zeros(1, dtype=np.int64)
        lam = 0.0

    head, tail, epochs_per_sample = make_epoch_schedule(graph)
    next_sample = epochs_per_sample.copy()
    n_epochs = params.epochs_for(n)

    kern = _backend.get_kernels(backend)
    n_threads = 1
    if not deterministic and kern is not _backend._fallback:
        n_threads = _backend.thread_count()
    root = Rng(params.seed)
    rng_state = np.array([root.spawn(t).seed for t in range(n_threads)], dtype=np.uint64)

    for epoch in range(n_epochs):
        kern.optimize_epochs(Y, S, assignment, head, tail, epochs_per_sample, next_sample,
                             float(params.a), float(params.b), lam, float(params.clip),
                             float(params.eps), int(params.negative_sample_rate),
                             float(params.initial_lr), int(n_epochs), epoch, epoch + 1,
                             rng_state, use_stars, n_threads)
        if not np.isfinite(Y).all():
            bad = int(np.flatnonzero(~np.isfinite(Y).all(axis=1))[0])
            raise OptimizationError(
                f"non-finite coordinate for point {bad} after epoch {epoch} "
                f"(lr={params.initial_lr}, clip={params.clip}, mode={mode})")
        if callback is not None:
            callback(epoch + 1, Y)
        if snapshot_every and snapshot_path and (epoch + 1) % snapshot_every == 0:
            _write_snapshot(snapshot_path, epoch + 1, Y)

    return replace(state, Y=Y, epoch=n_epochs)
