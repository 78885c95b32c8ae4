# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Semantics must match ``sspriv._fallback`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, INFINITY

cnp.import_array()

DEF UNION = 0
DEF INTER = 1
DEF GROUP = 2
DEF LP = 3


def lsap(cost):
    """Min-cost perfect matching on a square matrix (shortest augmenting path).

    Returns ``(col_of_row, total_cost)``.
    """
    cdef double[:, ::1] a = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.zeros(0, dtype=np.intp), 0.0
    cdef double[::1] u = np.zeros(n + 1)
    cdef double[::1] v = np.zeros(n + 1)
    cdef Py_ssize_t[::1] p = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(n + 1, dtype=np.intp)
    cdef double[::1] minv = np.empty(n + 1)
    cdef unsigned char[::1] used = np.empty(n + 1, dtype=np.uint8)
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while True:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
                if j0 == 0:
                    break
    col = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] colv = col
    cdef double total = 0.0
    for j in range(1, n + 1):
        colv[p[j] - 1] = j - 1
    for i in range(n):
        total += a[i, colv[i]]
    return col, total


def grid_success_counts(secrets, lo, eps, n_seg, int metric, group_ids, int n_groups,
                        double p, double eps_p):
    """Success count of every grid attacker over a batch of secret vectors.

    Attacker ``v`` (mixed radix over ``n_seg``, last secret fastest) guesses
    ``lo_i + (v_i + 0.5) * 2 eps_i`` for secret ``i``.
    """
    cdef double[:, ::1] g = np.ascontiguousarray(secrets, dtype=np.float64)
    cdef double[::1] lo_v = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] eps_v = np.ascontiguousarray(eps, dtype=np.float64)
    cdef long long[::1] nseg = np.ascontiguousarray(n_seg, dtype=np.int64)
    cdef long long[::1] gid = np.ascontiguousarray(group_ids, dtype=np.int64)
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t d = g.shape[1]
    cdef long long family = 1
    cdef Py_ssize_t i, r, b
    for i in range(d):
        family *= nseg[i]
    counts = np.zeros(family, dtype=np.int64)
    cdef long long[::1] cv = counts
    cdef double[::1] guess = np.empty(d)
    cdef long long[::1] digit = np.zeros(d, dtype=np.int64)
    cdef unsigned char[::1] group_ok = np.empty(max(n_groups, 1), dtype=np.uint8)
    cdef long long f, c
    cdef unsigned long long hitmask
    cdef bint use_mask = d <= 64
    cdef cnp.uint64_t[::1] gmask = np.zeros(max(n_groups, 1), dtype=np.uint64)
    if use_mask:
        for i in range(d):
            if gid[i] >= 0:
                gmask[gid[i]] |= (<unsigned long long>1) << i
    cdef double diff, acc
    cdef bint hit, ok, is_inf = p == INFINITY
    # compare sum |diff|^p against eps_p^p; no root per row
    cdef int p_code = 1 if p == 1.0 else (2 if p == 2.0 else 0)
    cdef double thr = eps_p if (is_inf or p_code == 1) else (eps_p * eps_p if p_code == 2 else pow(eps_p, p))
    with nogil:
        for f in range(family):
            for i in range(d):
                guess[i] = lo_v[i] + (digit[i] + 0.5) * 2.0 * eps_v[i]
            c = 0
            for r in range(n):
                if metric == UNION:
                    ok = False
                    for i in range(d):
                        if fabs(guess[i] - g[r, i]) <= eps_v[i]:
                            ok = True
                            break
                elif metric == INTER:
                    ok = True
                    for i in range(d):
                        if fabs(guess[i] - g[r, i]) > eps_v[i]:
                            ok = False
                            break
                elif metric == GROUP and use_mask:
                    hitmask = 0
                    for i in range(d):
                        if fabs(guess[i] - g[r, i]) <= eps_v[i]:
                            hitmask |= (<unsigned long long>1) << i
                    ok = False
                    for b in range(n_groups):
                        if (hitmask & gmask[b]) == gmask[b]:
                            ok = True
                            break
                elif metric == GROUP:
                    for b in range(n_groups):
                        group_ok[b] = 1
                    for i in range(d):
                        if gid[i] >= 0 and fabs(guess[i] - g[r, i]) > eps_v[i]:
                            group_ok[gid[i]] = 0
                    ok = False
                    for b in range(n_groups):
                        if group_ok[b]:
                            ok = True
                            break
                else:
                    acc = 0.0
                    for i in range(d):
                        diff = fabs(guess[i] - g[r, i])
                        if is_inf:
                            if diff > acc:
                                acc = diff
                        elif p_code == 1:
                            acc += diff
                        elif p_code == 2:
                            acc += diff * diff
                        else:
                            acc += pow(diff, p)
                    ok = acc <= thr
                if ok:
                    c += 1
            cv[f] = c
            # advance mixed-radix counter, last secret fastest
            i = d - 1
            while i >= 0:
                digit[i] += 1
                if digit[i] < nseg[i]:
                    break
                digit[i] = 0
                i -= 1
    return counts
