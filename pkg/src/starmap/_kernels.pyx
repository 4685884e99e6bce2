# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: exact kNN scan and the edge-sampled SGD epoch loop.

Mirrors ``_fallback.py`` operation for operation; keep the two in sync.
"""
import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange, threadid
from libc.math cimport pow, sqrt, INFINITY
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t splitmix64(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double clip_value(double c, double clip) noexcept nogil:
    if c > clip:
        return clip
    if c < -clip:
        return -clip
    return c


cdef inline double attr_coeff(double d2, double a, double b, double eps2,
                              double eps_pow) noexcept nogil:
    # eps_pow == pow(eps2, b - 1); one pow call per coefficient
    cdef double pb = pow(d2, b)
    if d2 > eps2:
        return (-2.0 * a * b * (pb / d2)) / (1.0 + a * pb)
    return (-2.0 * a * b * eps_pow) / (1.0 + a * pb)


def knn_scan(const double[:, ::1] X, Py_ssize_t k, int n_threads=1):
    """Exact k nearest neighbors, rows ordered by (squared distance, index)."""
    cdef Py_ssize_t n = X.shape[0], dim = X.shape[1]
    ids_arr = np.empty((n, k), dtype=np.int64)
    sqd_arr = np.empty((n, k), dtype=np.float64)
    cdef int64_t[:, ::1] ids = ids_arr
    cdef double[:, ::1] sqd = sqd_arr
    cdef Py_ssize_t i, j, col, p, count
    cdef double acc, t
    if n_threads < 1:
        n_threads = 1
    for i in prange(n, nogil=True, num_threads=n_threads, schedule="static"):
        count = 0
        for j in range(n):
            if j == i:
                continue
            acc = 0.0
            for col in range(dim):
                t = X[i, col] - X[j, col]
                acc = acc + t * t
            if count == k and acc >= sqd[i, k - 1]:
                continue
            # insertion keeps equal distances in index order
            if count < k:
                p = count
                count = count + 1
            else:
                p = k - 1
            while p > 0 and sqd[i, p - 1] > acc:
                sqd[i, p] = sqd[i, p - 1]
                ids[i, p] = ids[i, p - 1]
                p = p - 1
            sqd[i, p] = acc
            ids[i, p] = j
    return ids_arr, sqd_arr


cdef inline Py_ssize_t bounded(uint64_t r, uint64_t n) noexcept nogil:
    # multiply-shift range reduction on the high 32 bits; n < 2**32
    return <Py_ssize_t>(((r >> 32) * n) >> 32)


cdef uint64_t sample_edge(double* Y, const double* S, const int64_t* assignment,
                          Py_ssize_t j, Py_ssize_t k, Py_ssize_t dim, Py_ssize_t n,
                          double a, double b, double lam, double clip, double eps2,
                          double eps_pow, int neg_rate, double lr, bint use_stars, uint64_t state,
                          double* u) noexcept nogil:
    cdef Py_ssize_t d, p, m
    cdef double d2 = 0.0, t, ca, cr, g, gj, gk, dsj, dsk, csj, csk, norm2, norm
    cdef double* yj = Y + j * dim
    cdef double* yk = Y + k * dim
    cdef double* ym
    cdef const double* sj
    cdef const double* sk
    cdef uint64_t r
    for d in range(dim):
        t = yj[d] - yk[d]
        d2 = d2 + t * t
    ca = clip_value(attr_coeff(d2, a, b, eps2, eps_pow), clip)

    if use_stars:
        sj = S + assignment[j] * dim
        sk = S + assignment[k] * dim
        dsj = 0.0
        dsk = 0.0
        for d in range(dim):
            t = yj[d] - sj[d]
            dsj = dsj + t * t
            t = yk[d] - sk[d]
            dsk = dsk + t * t
        csj = clip_value(attr_coeff(dsj, a, b, eps2, eps_pow), clip)
        csk = clip_value(attr_coeff(dsk, a, b, eps2, eps_pow), clip)
        for d in range(dim):
            g = ca * (yj[d] - yk[d])
            gj = (1.0 - lam) * g + lam * (csj * (yj[d] - sj[d]))
            gk = (1.0 - lam) * (-g) + lam * (csk * (yk[d] - sk[d]))
            yj[d] = yj[d] + lr * gj
            yk[d] = yk[d] + lr * gk
    else:
        for d in range(dim):
            g = ca * (yj[d] - yk[d])
            yj[d] = yj[d] + lr * g
            yk[d] = yk[d] + lr * (-g)

    for p in range(neg_rate):
        r = splitmix64(&state)
        m = bounded(r, <uint64_t>n)
        if m == j:
            continue
        ym = Y + m * dim
        d2 = 0.0
        for d in range(dim):
            t = yj[d] - ym[d]
            d2 = d2 + t * t
        if d2 > 0.0:
            cr = clip_value(2.0 * b / ((d2 if d2 > eps2 else eps2) * (1.0 + a * pow(d2, b))), clip)
            for d in range(dim):
                yj[d] = yj[d] + lr * (cr * (yj[d] - ym[d]))
        else:
            cr = clip_value(2.0 * b / eps2, clip)
            norm2 = 0.0
            for d in range(dim):
                r = splitmix64(&state)
                u[d] = 2.0 * (<double>(r >> 11) * INV_2_53) - 1.0
                norm2 = norm2 + u[d] * u[d]
            if norm2 > 0.0:
                norm = sqrt(norm2)
                for d in range(dim):
                    yj[d] = yj[d] + lr * (cr * (u[d] / norm))
    return state


def optimize_epochs(double[:, ::1] Y, const double[:, ::1] S,
                    const int64_t[::1] assignment, const int64_t[::1] head,
                    const int64_t[::1] tail, const double[::1] epochs_per_sample,
                    double[::1] epoch_of_next_sample, double a, double b, double lam,
                    double clip, double eps, int neg_rate, double initial_lr,
                    Py_ssize_t n_epochs, Py_ssize_t start, Py_ssize_t stop,
                    uint64_t[::1] rng_state, bint use_stars, int n_threads=1):
    """Run SGD epochs ``start .. stop-1`` in place.

    With ``n_threads > 1`` edges are split across threads that write to
    ``Y`` without locks; thread ``t`` draws from ``rng_state[t]``.
    """
    cdef Py_ssize_t n = Y.shape[0], dim = Y.shape[1]
    cdef Py_ssize_t n_edges = head.shape[0]
    cdef Py_ssize_t epoch, e
    cdef double lr, bound, eps2 = eps * eps
    cdef double eps_pow = pow(eps2, b - 1.0)
    cdef uint64_t state
    cdef int tid
    cdef double* scratch
    cdef double* y_ptr = &Y[0, 0]
    cdef const double* s_ptr = &S[0, 0]
    cdef const int64_t* a_ptr = &assignment[0]
    if n_threads < 1:
        n_threads = 1
    if n >= 2 ** 32:
        raise ValueError("at most 2**32 - 1 points are supported")
    if n_threads > rng_state.shape[0]:
        raise ValueError("rng_state needs one entry per thread")
    scratch = <double*>malloc(n_threads * dim * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    try:
        for epoch in range(start, stop):
            lr = initial_lr * (1.0 - <double>epoch / <double>n_epochs)
            bound = <double>(epoch + 1)
            if n_threads == 1:
                state = rng_state[0]
                with nogil:
                    for e in range(n_edges):
                        if epoch_of_next_sample[e] <= bound:
                            state = sample_edge(y_ptr, s_ptr, a_ptr, head[e], tail[e], dim, n,
                                                a, b, lam, clip, eps2, eps_pow, neg_rate, lr,
                                                use_stars, state, scratch)
                            epoch_of_next_sample[e] += epochs_per_sample[e]
                rng_state[0] = state
            else:
                for e in prange(n_edges, nogil=True, num_threads=n_threads, schedule="static"):
                    if epoch_of_next_sample[e] <= bound:
                        tid = threadid()
                        rng_state[tid] = sample_edge(y_ptr, s_ptr, a_ptr, head[e], tail[e], dim, n,
                                                     a, b, lam, clip, eps2, eps_pow, neg_rate, lr,
                                                     use_stars, rng_state[tid],
                                                     scratch + tid * dim)
                        epoch_of_next_sample[e] += epochs_per_sample[e]
    finally:
        free(scratch)
