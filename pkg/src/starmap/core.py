"""Dense storage helpers, distance kernels and the seeded PRNG.

Everything in the package works on float64, row-major (C-contiguous)
numpy arrays.  ``as_data_matrix`` is the single gate that validates and
normalizes user input into that layout.

The random number generator is SplitMix64 (Steele, Lea & Flood 2014).  It
is counter based: draw ``n`` of a stream with seed ``s`` is
``mix(s + n * GAMMA)`` in wrapping 64-bit arithmetic, so the stream is
identical on every platform and can be produced either one value at a
time (compiled and pure-Python kernels) or as a vectorized block.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "DimensionError",
    "as_data_matrix",
    "euclidean_distance",
    "squared_distance",
    "Rng",
    "splitmix64_next",
    "MASK64",
    "GAMMA",
]

MASK64 = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO_POW_M53 = 1.0 / 9007199254740992.0


class DimensionError(ValueError):
    """Raised when array shapes are incompatible."""


def as_data_matrix(data, name="X"):
    """Return ``data`` as a finite, C-contiguous float64 matrix.

    Parameters
    ----------
    data : array_like
        Two-dimensional input of shape (rows, cols).
    name : str
        Used in error messages.

    Raises
    ------
    ValueError
        If the input is not 2-D, is empty, or contains NaN/Inf.
    """
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must have at least one row and column, got {arr.shape}")
    if not np.isfinite(arr).all():
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(f"{name} contains a non-finite value at ({bad[0]}, {bad[1]})")
    return arr


def _as_vectors(u, v):
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    return u, v


def squared_distance(u, v):
    """Squared Euclidean distance between two vectors."""
    u, v = _as_vectors(u, v)
    diff = u - v
    return float(np.dot(diff, diff))


def euclidean_distance(u, v):
    """Euclidean distance between two vectors."""
    return math.sqrt(squared_distance(u, v))


def splitmix64_next(state):
    """Advance a SplitMix64 state; returns ``(new_state, output)``."""
    state = (state + GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return state, z ^ (z >> 31)


def _mix_array(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class Rng:
    """SplitMix64 generator with scalar and vectorized draws.

    Scalar and block draws consume the same stream: ``Rng(s).u64(3)``
    equals three successive ``Rng(s).next_u64()`` calls.
    """

    def __init__(self, seed=0):
        self.seed = int(seed) & MASK64
        self.state = self.seed

    def spawn(self, index):
        """Independent child stream derived from this generator's seed."""
        _, child_seed = splitmix64_next((self.seed ^ ((int(index) + 1) * _MIX2)) & MASK64)
        return Rng(child_seed)

    def next_u64(self):
        self.state, out = splitmix64_next(self.state)
        return out

    def u64(self, n):
        """Block of ``n`` raw 64-bit outputs as a uint64 array."""
        n = int(n)
        counters = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + counters * np.uint64(GAMMA)
            out = _mix_array(z)
        self.state = (self.state + n * GAMMA) & MASK64
        return out

    def random(self, n=None):
        """Uniform doubles in [0, 1) with 53 random bits."""
        if n is None:
            return (self.next_u64() >> 11) * _TWO_POW_M53
        return (self.u64(n) >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53

    def integers(self, high, n=None):
        """Uniform integers in [0, high) by modulo reduction."""
        if high < 1:
            raise ValueError("high must be >= 1")
        if n is None:
            return self.next_u64() % high
        return (self.u64(n) % np.uint64(high)).astype(np.int64)

    def normal(self, n, loc=0.0, scale=1.0):
        """Gaussian draws via the Box-Muller transform."""
        n = int(n)
        m = (n + 1) // 2
        u1 = 1.0 - self.random(m)  # (0, 1], keeps log finite
        u2 = self.random(m)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return loc + scale * z[:n]

    def choice_weighted(self, weights):
        """Index drawn with probability proportional to ``weights``."""
        cdf = np.cumsum(weights)
        total = cdf[-1]
        if not total > 0:
            return int(self.integers(len(weights)))
        u = self.random() * total
        return int(min(np.searchsorted(cdf, u, side="right"), len(weights) - 1))
