"""Pure-Python kernels.

Same algorithms and the same floating-point operation order as
``_kernels.pyx``, so both backends produce bit-identical results in
deterministic mode.  Edit the two files together.
"""
import math

import numpy as np

from .core import splitmix64_next

_INV_2_53 = 1.0 / 9007199254740992.0


def knn_scan(X, k, n_threads=1):
    """Exact k nearest neighbors by full scan.

    Returns ``(ids, sqdists)``, each of shape (N, k), rows sorted by
    (squared distance, index).  The query point itself is excluded.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, dim = X.shape
    ids = np.empty((n, k), dtype=np.int64)
    sqd = np.empty((n, k), dtype=np.float64)
    index = np.arange(n)
    for i in range(n):
        diff = X - X[i]
        acc = np.zeros(n)
        for col in range(dim):
            acc += diff[:, col] * diff[:, col]
        acc[i] = np.inf
        order = np.lexsort((index, acc))[:k]
        ids[i] = order
        sqd[i] = acc[order]
    return ids, sqd


def _clip(c, clip):
    if c > clip:
        return clip
    if c < -clip:
        return -clip
    return c


def _attr_coeff(d2, a, b, eps2, eps_pow):
    pb = math.pow(d2, b)
    if d2 > eps2:
        return (-2.0 * a * b * (pb / d2)) / (1.0 + a * pb)
    return (-2.0 * a * b * eps_pow) / (1.0 + a * pb)


def _sample_edge(Y, S, assignment, j, k, dim, n, a, b, lam, clip, eps2,
                 eps_pow, neg_rate, lr, use_stars, state):
    yj = Y[j]
    yk = Y[k]
    d2 = 0.0
    for d in range(dim):
        t = yj[d] - yk[d]
        d2 += t * t
    ca = _clip(_attr_coeff(d2, a, b, eps2, eps_pow), clip)

    if use_stars:
        sj = S[assignment[j]]
        sk = S[assignment[k]]
        dsj = 0.0
        dsk = 0.0
        for d in range(dim):
            t = yj[d] - sj[d]
            dsj += t * t
            t = yk[d] - sk[d]
            dsk += t * t
        csj = _clip(_attr_coeff(dsj, a, b, eps2, eps_pow), clip)
        csk = _clip(_attr_coeff(dsk, a, b, eps2, eps_pow), clip)
        for d in range(dim):
            g = ca * (yj[d] - yk[d])
            gj = (1.0 - lam) * g + lam * (csj * (yj[d] - sj[d]))
            gk = (1.0 - lam) * (-g) + lam * (csk * (yk[d] - sk[d]))
            yj[d] += lr * gj
            yk[d] += lr * gk
    else:
        for d in range(dim):
            g = ca * (yj[d] - yk[d])
            yj[d] += lr * g
            yk[d] += lr * (-g)

    for _ in range(neg_rate):
        state, r = splitmix64_next(state)
        m = ((r >> 32) * n) >> 32
        if m == j:
            continue
        ym = Y[m]
        d2 = 0.0
        for d in range(dim):
            t = yj[d] - ym[d]
            d2 += t * t
        if d2 > 0.0:
            cr = _clip(2.0 * b / (max(d2, eps2) * (1.0 + a * math.pow(d2, b))), clip)
            for d in range(dim):
                yj[d] += lr * (cr * (yj[d] - ym[d]))
        else:
            # coincident pair: push along a random unit direction
            cr = _clip(2.0 * b / eps2, clip)
            u = [0.0] * dim
            norm2 = 0.0
            for d in range(dim):
                state, r = splitmix64_next(state)
                u[d] = 2.0 * ((r >> 11) * _INV_2_53) - 1.0
                norm2 += u[d] * u[d]
            if norm2 > 0.0:
                norm = math.sqrt(norm2)
                for d in range(dim):
                    yj[d] += lr * (cr * (u[d] / norm))
    return state


def optimize_epochs(Y, S, assignment, head, tail, epochs_per_sample,
                    epoch_of_next_sample, a, b, lam, clip, eps, neg_rate,
                    initial_lr, n_epochs, start, stop, rng_state, use_stars,
                    n_threads=1):
    """Run SGD epochs ``start .. stop-1`` in place.

    ``Y``, ``epoch_of_next_sample`` and ``rng_state`` (uint64 array; only
    element 0 is used here) are mutated.  ``n_threads`` is accepted for
    signature compatibility; this backend always runs sequentially.
    """
    n, dim = Y.shape
    rows = Y.tolist()
    stars = S.tolist() if use_stars else None
    assign = assignment.tolist() if use_stars else None
    heads = head.tolist()
    tails = tail.tolist()
    eps_per = epochs_per_sample.tolist()
    next_sample = epoch_of_next_sample.tolist()
    eps2 = eps * eps
    eps_pow = math.pow(eps2, b - 1.0)
    state = int(rng_state[0])
    n_edges = len(heads)
    for epoch in range(start, stop):
        lr = initial_lr * (1.0 - float(epoch) / float(n_epochs))
        bound = float(epoch + 1)
        for e in range(n_edges):
            if next_sample[e] <= bound:
                state = _sample_edge(rows, stars, assign, heads[e], tails[e], dim, n,
                                     a, b, lam, clip, eps2, eps_pow, neg_rate, lr, use_stars,
                                     state)
                next_sample[e] += eps_per[e]
    Y[:] = np.asarray(rows, dtype=np.float64).reshape(n, dim)
    epoch_of_next_sample[:] = next_sample
    rng_state[0] = state
