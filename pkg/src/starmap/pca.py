"""PCA for initialization, star placement and K-means pre-reduction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, Rng, as_data_matrix

EXACT_SVD_MAX_DIM = 2000
RANDOMIZED_ITERS = 20
RANDOMIZED_OVERSAMPLE = 10
TARGET_EXTENT = 10.0


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def n_components(self):
        return self.components.shape[0]

    @property
    def dim(self):
        return self.components.shape[1]


def _orient(components):
    # largest-magnitude entry of every component made nonnegative
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def _randomized_svd(M, q, seed):
    """Top-``q`` right singular vectors via subspace iteration."""
    rng = Rng(seed)
    n, d = M.shape
    width = min(q + RANDOMIZED_OVERSAMPLE, n, d)
    Omega = rng.normal(d * width).reshape(d, width)
    Z = M @ Omega
    Z, _ = np.linalg.qr(Z)
    for _ in range(RANDOMIZED_ITERS):
        Z, _ = np.linalg.qr(M.T @ Z)
        Z, _ = np.linalg.qr(M @ Z)
    B = Z.T @ M
    _, s, Vt = np.linalg.svd(B, full_matrices=False)
    return s[:q], Vt[:q]


def fit_pca(M, q, seed=0):
    """Fit the top-``q`` principal directions of ``M``.

    Uses an exact thin SVD when ``M`` has at most 2000 columns and a seeded
    randomized SVD otherwise.  Components are oriented so that each one's
    largest-magnitude entry is nonnegative.
    """
    M = as_data_matrix(M, "M")
    n, d = M.shape
    q = int(q)
    if n < 2:
        raise ValueError("PCA needs at least two rows")
    if not 1 <= q <= min(n, d):
        raise ValueError(f"q must be in [1, {min(n, d)}], got {q}")
    mean = M.mean(axis=0)
    centered = M - mean
    if d <= EXACT_SVD_MAX_DIM:
        _, s, Vt = np.linalg.svd(centered, full_matrices=False)
        s, Vt = s[:q], Vt[:q]
    else:
        s, Vt = _randomized_svd(centered, q, seed)
    components = _orient(np.ascontiguousarray(Vt))
    explained = s ** 2 / (n - 1)
    return PcaModel(mean, components, explained)


def transform(model, M):
    """Project rows of ``M`` onto the model's components."""
    M = as_data_matrix(M, "M")
    if M.shape[1] != model.dim:
        raise DimensionError(f"expected {model.dim} columns, got {M.shape[1]}")
    return (M - model.mean) @ model.components.T


def joint_embed(X, A, q, seed=0):
    """PCA of the stacked matrix ``[X; A]``, split back into (Y0, S)."""
    X = as_data_matrix(X, "X")
    A = as_data_matrix(A, "A")
    if X.shape[1] != A.shape[1]:
        raise DimensionError(f"X has {X.shape[1]} columns but A has {A.shape[1]}")
    stacked = np.vstack([X, A])
    model = fit_pca(stacked, q, seed=seed)
    Z = transform(model, stacked)
    n = X.shape[0]
    return np.ascontiguousarray(Z[:n]), np.ascontiguousarray(Z[n:])


def rescale_init(Y0, S=None, target_extent=TARGET_EXTENT):
    """Scale ``Y0`` and ``S`` by one shared factor so the largest |coordinate| is ``target_extent``.

    An all-zero initialization is returned unchanged.
    """
    if not target_extent > 0:
        raise ValueError("target_extent must be positive")
    Y0 = np.asarray(Y0, dtype=np.float64)
    parts = [np.abs(Y0).ravel()]
    if S is not None:
        S = np.asarray(S, dtype=np.float64)
        parts.append(np.abs(S).ravel())
    extent = max(float(p.max()) if p.size else 0.0 for p in parts)
    if extent == 0.0:
        return Y0.copy(), (None if S is None else S.copy())
    f = target_extent / extent
    return Y0 * f, (None if S is None else S * f)
