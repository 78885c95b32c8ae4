"""Independent reference computations used by the tests.

Nothing here imports the package's numerical code; each oracle takes a
different route to the same quantity (brute force, exact rationals, scipy).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy import linalg, optimize


def w2_bures(m1, c1, m2, c2) -> float:
    """W2 between Gaussians via the matrix square root formula."""
    r1 = linalg.sqrtm(c1)
    cross = linalg.sqrtm(r1 @ c2 @ r1)
    sq = np.sum((np.asarray(m1) - np.asarray(m2)) ** 2) + np.trace(c1) + np.trace(c2) - 2 * np.trace(cross).real
    return math.sqrt(max(sq, 0.0))


def cov_2d(lam1, lam2, alpha):
    c, s = math.cos(alpha), math.sin(alpha)
    r = np.array([[c, -s], [s, c]])
    return r @ np.diag([lam1, lam2]) @ r.T


def w2_assignment_scipy(x, y) -> float:
    x = np.asarray(x, float).reshape(len(x), -1)
    y = np.asarray(y, float).reshape(len(y), -1)
    cost = ((x[:, None] - y[None]) ** 2).sum(-1)
    r, c = optimize.linear_sum_assignment(cost)
    return math.sqrt(cost[r, c].sum() / len(x))


def w2_permutations(x, y) -> float:
    """Brute force over all matchings (tiny m only)."""
    x = np.asarray(x, float).reshape(len(x), -1)
    y = np.asarray(y, float).reshape(len(y), -1)
    best = min(sum(((x[i] - y[p]) ** 2).sum() for i, p in enumerate(perm))
               for perm in itertools.permutations(range(len(x))))
    return math.sqrt(best / len(x))


def union_exact(ratios) -> Fraction:
    """1 - prod(1 - r_i) with r_i = 2 eps_i / s_i as exact fractions."""
    out = Fraction(1)
    for r in ratios:
        out *= 1 - Fraction(r)
    return 1 - out


def inter_exact(ratios) -> Fraction:
    return math.prod((Fraction(r) for r in ratios), start=Fraction(1))


def group_exact(ratios, groups) -> Fraction:
    miss = Fraction(1)
    for g in groups:
        miss *= 1 - inter_exact([ratios[i] for i in g])
    return 1 - miss


def posterior_success_rate_by_integration(eps, s, guess_offset, n=200_001) -> float:
    """P(|c - g| <= eps) for g ~ U[0, s), c = guess_offset, by midpoint quadrature."""
    g = (np.arange(n) + 0.5) * s / n
    return float(np.mean(np.abs(guess_offset - g) <= eps))


def grid_family_bruteforce(lo, hi, eps):
    """All constant grid guesses via explicit segment enumeration."""
    axes = []
    for l, h, e in zip(lo, hi, eps):
        mids, left = [], l
        while left < h - 1e-12:
            mids.append(left + e)
            left += 2 * e
        axes.append(mids)
    return [np.array(v) for v in itertools.product(*axes)]


def bound_union_direct(T, eps, gamma):
    """Independent evaluation using integer search instead of ceil."""
    d = len(eps)
    x = 1.0 / (1.0 - (1.0 - T) ** (1.0 / d)) - 1.0
    k = 0
    while k < x - 1e-9:
        k += 1
    geo = math.prod(eps) ** (1.0 / d)
    return 2 * gamma * k * geo


def ks_uniform_pvalue(samples) -> float:
    from scipy import stats

    return float(stats.kstest(samples, "uniform").pvalue)
