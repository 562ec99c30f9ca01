# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pairwise closest-point kernel for stacks of canonical k-flats.

For every unordered pair the k x k SPD system (I - G^T G) beta = G^T c1 - c2
is solved by Cholesky; pairs whose subspace determinant (product of the
Cholesky diagonal) falls at or below det_tol are rejected as parallel and
tallied.  The inner loops run without the GIL so replications can be
processed by parallel threads.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "compiled"


cdef inline bint _solve_pair(const double[:, :, ::1] bases,
                             const double[:, ::1] anchors,
                             Py_ssize_t i, Py_ssize_t j,
                             Py_ssize_t d, Py_ssize_t k,
                             double det_tol,
                             double[:, ::1] g, double[:, ::1] s,
                             double[::1] c1, double[::1] c2,
                             double[::1] beta, double[::1] alpha,
                             double* dist_out, double[::1] mid_out) noexcept nogil:
    """Closest-point data for pair (i, j); False if rejected as parallel."""
    cdef Py_ssize_t a, b, c, m
    cdef double acc, piv, det

    for a in range(k):
        for b in range(k):
            acc = 0.0
            for m in range(d):
                acc += bases[i, m, a] * bases[j, m, b]
            g[a, b] = acc
    for a in range(k):
        for b in range(k):
            acc = 0.0
            for c in range(k):
                acc += g[c, a] * g[c, b]
            s[a, b] = (1.0 if a == b else 0.0) - acc

    # in-place Cholesky; det [M,L] = prod of pivots
    det = 1.0
    for a in range(k):
        acc = s[a, a]
        for c in range(a):
            acc -= s[a, c] * s[a, c]
        if acc <= 0.0:
            return False
        piv = sqrt(acc)
        det *= piv
        s[a, a] = piv
        for b in range(a + 1, k):
            acc = s[b, a]
            for c in range(a):
                acc -= s[b, c] * s[a, c]
            s[b, a] = acc / piv
    if det <= det_tol:
        return False

    for a in range(k):
        acc = 0.0
        for m in range(d):
            acc += bases[i, m, a] * (anchors[j, m] - anchors[i, m])
        c1[a] = acc
        acc = 0.0
        for m in range(d):
            acc += bases[j, m, a] * (anchors[j, m] - anchors[i, m])
        c2[a] = acc

    # rhs = G^T c1 - c2, stored in beta, then two triangular solves
    for a in range(k):
        acc = -c2[a]
        for c in range(k):
            acc += g[c, a] * c1[c]
        beta[a] = acc
    for a in range(k):
        acc = beta[a]
        for c in range(a):
            acc -= s[a, c] * beta[c]
        beta[a] = acc / s[a, a]
    for a in range(k - 1, -1, -1):
        acc = beta[a]
        for c in range(a + 1, k):
            acc -= s[c, a] * beta[c]
        beta[a] = acc / s[a, a]

    for a in range(k):
        acc = c1[a]
        for c in range(k):
            acc += g[a, c] * beta[c]
        alpha[a] = acc

    acc = 0.0
    for m in range(d):
        piv = anchors[i, m]
        for a in range(k):
            piv += bases[i, m, a] * alpha[a]
        det = anchors[j, m]
        for a in range(k):
            det += bases[j, m, a] * beta[a]
        mid_out[m] = 0.5 * (piv + det)
        acc += (piv - det) * (piv - det)
    dist_out[0] = sqrt(acc)
    return True


def pair_records(const double[:, :, ::1] bases, const double[:, ::1] anchors,
                 double det_tol, double u_max):
    """All unordered general-position pairs with distance <= u_max.

    Returns (i, j, dist, mid, n_rejected) where i, j are int64 index
    arrays, dist the distances, mid the (count, d) midpoints and
    n_rejected the number of near-parallel pairs dropped.
    """
    cdef Py_ssize_t n = bases.shape[0]
    cdef Py_ssize_t d = bases.shape[1]
    cdef Py_ssize_t k = bases.shape[2]

    scratch_g = np.empty((k, k))
    scratch_s = np.empty((k, k))
    scratch_c1 = np.empty(k)
    scratch_c2 = np.empty(k)
    scratch_beta = np.empty(k)
    scratch_alpha = np.empty(k)
    cdef double[:, ::1] g = scratch_g
    cdef double[:, ::1] s = scratch_s
    cdef double[::1] c1 = scratch_c1
    cdef double[::1] c2 = scratch_c2
    cdef double[::1] beta = scratch_beta
    cdef double[::1] alpha = scratch_alpha

    # per-row buffers: at most n-1 hits for a fixed first index
    row_j = np.empty(max(n - 1, 1), dtype=np.int64)
    row_dist = np.empty(max(n - 1, 1))
    row_mid = np.empty((max(n - 1, 1), d))
    cdef long long[::1] rj = row_j
    cdef double[::1] rd = row_dist
    cdef double[:, ::1] rm = row_mid

    out_i = []
    out_j = []
    out_dist = []
    out_mid = []

    cdef Py_ssize_t i, j, hits
    cdef long long rejected = 0
    cdef double dist
    cdef double[::1] mid = np.empty(d)

    for i in range(n - 1):
        hits = 0
        with nogil:
            for j in range(i + 1, n):
                if not _solve_pair(bases, anchors, i, j, d, k, det_tol,
                                   g, s, c1, c2, beta, alpha, &dist, mid):
                    rejected += 1
                    continue
                if dist <= u_max:
                    rj[hits] = j
                    rd[hits] = dist
                    rm[hits, :] = mid
                    hits += 1
        if hits:
            out_i.append(np.full(hits, i, dtype=np.int64))
            out_j.append(row_j[:hits].copy())
            out_dist.append(row_dist[:hits].copy())
            out_mid.append(row_mid[:hits].copy())

    if out_i:
        return (np.concatenate(out_i), np.concatenate(out_j),
                np.concatenate(out_dist), np.concatenate(out_mid),
                int(rejected))
    return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64),
            np.empty(0), np.empty((0, d)), int(rejected))
