"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import math

import numpy as np

UNION, INTER, GROUP, LP = 0, 1, 2, 3


def lsap(cost):
    """Min-cost perfect matching on a square matrix (shortest augmenting path).

    Returns ``(col_of_row, total_cost)``. Row-wise scans are vectorized; the
    augmentation bookkeeping follows the compiled kernel step for step.
    """
    a = np.ascontiguousarray(cost, dtype=np.float64)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.zeros(0, dtype=np.intp), 0.0
    # 1-based: index 0 is the virtual column/row
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.intp)
    way = np.zeros(n + 1, dtype=np.intp)
    padded = np.empty((n + 1, n + 1))
    padded[0] = 0.0
    padded[1:, 0] = 0.0
    padded[1:, 1:] = a
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            cur = padded[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            cols = np.flatnonzero(used)
            u[p[cols]] += delta
            v[cols] -= delta
            minv[~used] -= delta
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
    col[p[1:] - 1] = np.arange(n)
    total = 0.0
    for i in range(n):
        total += a[i, col[i]]
    return col, total


def grid_success_counts(secrets, lo, eps, n_seg, metric, group_ids, n_groups, p, eps_p):
    """Success count of every grid attacker over a batch of secret vectors."""
    g = np.ascontiguousarray(secrets, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    n_seg = np.asarray(n_seg, dtype=np.int64)
    group_ids = np.asarray(group_ids, dtype=np.int64)
    family = int(np.prod(n_seg))
    counts = np.zeros(family, dtype=np.int64)
    for f, digits in enumerate(np.ndindex(*[int(x) for x in n_seg])):
        guess = lo + (np.asarray(digits) + 0.5) * 2.0 * eps
        diff = np.abs(guess - g)
        if metric == UNION:
            ok = (diff <= eps).any(axis=1)
        elif metric == INTER:
            ok = (diff <= eps).all(axis=1)
        elif metric == GROUP:
            hit = diff <= eps
            ok = np.zeros(g.shape[0], dtype=bool)
            for b in range(n_groups):
                members = group_ids == b
                ok |= hit[:, members].all(axis=1)
        else:
            if math.isinf(p):
                ok = diff.max(axis=1) <= eps_p
            elif p == 1.0:
                ok = diff.sum(axis=1) <= eps_p
            elif p == 2.0:
                ok = (diff * diff).sum(axis=1) <= eps_p * eps_p
            else:
                ok = (diff**p).sum(axis=1) <= eps_p**p
        counts[f] = int(ok.sum())
    return counts
