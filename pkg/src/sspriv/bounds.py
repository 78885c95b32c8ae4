"""Privacy-distortion lower bounds and related constants.

Each ``lower_bound_*`` returns a value ``B`` such that any mechanism meeting
the privacy budget ``T`` has distortion strictly greater than ``B``.
``gamma`` is the conversion constant between secret-guessing range and
distributional distance; it defaults to ``sqrt(d)/2``, its value for the
Gaussian families handled here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._numeric import ceil_tol
from .model import GroupPartition, LpSpec, ModelError


class BoundError(ModelError):
    pass


GAUSSIAN = "gaussian-closed-form"
USER = "user-supplied"


@dataclass(frozen=True)
class GammaValue:
    metric: str
    value: float
    provenance: str = USER

    def __post_init__(self):
        if not self.value >= 0:
            raise BoundError("gamma must be non-negative")

    @classmethod
    def gaussian(cls, d: int, metric: str = "union") -> "GammaValue":
        return cls(metric, math.sqrt(d) / 2.0, GAUSSIAN)


def _gamma(gamma, d: int) -> float:
    if gamma is None:
        return math.sqrt(d) / 2.0
    if isinstance(gamma, GammaValue):
        return gamma.value
    return float(gamma)


def _budget(T: float) -> float:
    T = float(T)
    if not 0.0 < T < 1.0:
        raise BoundError(f"privacy budget T must lie in (0, 1), got {T}")
    return T


def _eps(eps) -> np.ndarray:
    e = np.atleast_1d(np.asarray(eps, dtype=float))
    if e.ndim != 1 or e.size < 1 or np.any(e <= 0):
        raise BoundError("tolerances must be a non-empty vector of positive values")
    return e


def _geo_mean(e: np.ndarray) -> float:
    return float(np.exp(np.mean(np.log(e))))


def lower_bound_union(T, eps, gamma=None, proof_form: bool = False) -> float:
    """``2 gamma ceil(1/(1-(1-T)^(1/d)) - 1) * geomean(eps)``.

    ``proof_form`` uses the intermediate ``ceil((1-T)^(1/d) ceil(1/(1-(1-T)^(1/d))))``
    factor from which the stated form is relaxed.
    """
    T, e = _budget(T), _eps(eps)
    d = e.size
    q = (1.0 - T) ** (1.0 / d)
    if proof_form:
        k = ceil_tol(q * ceil_tol(1.0 / (1.0 - q)))
    else:
        k = ceil_tol(1.0 / (1.0 - q) - 1.0)
    return float(2.0 * _gamma(gamma, d) * k * _geo_mean(e))


def lower_bound_inter(T, eps, gamma=None) -> float:
    """``2 gamma (ceil(1/T)^(1/d) geomean(eps) - mean(eps))``."""
    T, e = _budget(T), _eps(eps)
    d = e.size
    return float(2.0 * _gamma(gamma, d) * (ceil_tol(1.0 / T) ** (1.0 / d) * _geo_mean(e) - e.mean()))


def lower_bound_group(T, eps, partition: GroupPartition, gamma=None, literal: bool = False) -> float:
    """Group bound ``2 gamma (K * geomean(eps) - mean(eps))``.

    By default ``K = ceil((1/(1-(1-T)^(1/beta)))^beta)^(1/d)``, which equals the
    intersection factor at ``beta = 1``. ``literal=True`` takes the ceiling
    after the ``1/d`` root instead: ``K = ceil((1/(1-(1-T)^(1/beta)))^(beta/d))``.
    """
    T, e = _budget(T), _eps(eps)
    d = e.size
    if partition is None:
        raise BoundError("group bound needs a partition")
    if not partition.covers(d):
        raise BoundError(f"partition {partition.groups} does not cover all {d} secrets")
    beta = partition.beta
    inner = 1.0 / (1.0 - (1.0 - T) ** (1.0 / beta))
    if literal:
        k = ceil_tol(inner ** (beta / d))
    else:
        k = ceil_tol(inner**beta) ** (1.0 / d)
    return float(2.0 * _gamma(gamma, d) * (k * _geo_mean(e) - e.mean()))


def lower_bound_lp(T, lp: LpSpec, d: int, gamma=None) -> float:
    """``2 gamma (ceil(1/T)^(1/d) - 1) eps_p / d^(1/p)``."""
    T = _budget(T)
    if d < 1:
        raise BoundError("d must be >= 1")
    return float(2.0 * _gamma(gamma, d) * (ceil_tol(1.0 / T) ** (1.0 / d) - 1.0) * lp.eps_p / lp.dim_root(d))


def surrogate_bound_line(metric: str, eps=None, partition: GroupPartition | None = None,
                         lp: LpSpec | None = None) -> float:
    """Coefficient ``c`` with ``distortion >= -c * surrogate_privacy``.

    Rests on empirical W2 dominating the Euclidean norm of the secret
    errors. For ``lp`` the norm comparison gives ``eps_p * d^(1/2 - 1/p)``
    when ``p < 2`` and ``eps_p`` otherwise.
    """
    from .privacy import metric_name

    metric = metric_name(metric)
    if metric == "lp":
        if lp is None:
            raise BoundError("lp line needs an LpSpec")
        if lp.p >= 2:
            return lp.eps_p
        d = _eps(eps).size
        return lp.eps_p * d ** (0.5 - 1.0 / lp.p)
    e = _eps(eps)
    if metric == "union":
        return float(np.sqrt(np.sum(e**2)))
    if metric == "inter":
        return float(e.min())
    if partition is None:
        raise BoundError("group line needs a partition")
    partition.check_within(e.size)
    return float(np.sqrt(sum(e[list(g)].min() ** 2 for g in partition.groups)))


def composition_bound(privacies, a, b):
    """Joint privacy of adaptively composed releases: ``min(1, a * prod(P_i / b))``.

    ``a`` and ``b`` are the sup and inf of the prior mass function. When every
    input is an ``int`` or ``Fraction`` the result is an exact ``Fraction``.
    """
    items = list(privacies) if np.ndim(privacies) else [privacies]
    exact = all(isinstance(v, (int, Fraction)) for v in (*items, a, b))
    if not exact:
        items = [float(v) for v in items]
        a, b = float(a), float(b)
    if not (0 < b <= a < 1):
        raise BoundError(f"need 0 < b <= a < 1, got a={a}, b={b}")
    if not items or any(not (0 < p <= 1) for p in items):
        raise BoundError("per-mechanism privacies must lie in (0, 1]")
    value = a
    for p in items:
        value *= p / b
    return min(Fraction(1) if exact else 1.0, value)


def random_offset_constant(eps, lengths) -> float:
    """``c_{eps,s} = 2 c_eps c_2 / (c_1 (1 - 2 c_2))`` bounding
    distortion / optimal distortion for the random-offset mechanism.

    ``x_i = eps_i / s_i``, ``c_1 = min x``, ``c_2 = max x``, and
    ``c_eps = rms(eps) / geomean(eps)``. Needs ``c_2 < 1/2``.
    """
    e = _eps(eps)
    s = np.asarray(lengths, dtype=float)
    if s.shape != e.shape or np.any(s <= 0):
        raise BoundError("lengths must be positive and match eps")
    x = e / s
    c1, c2 = float(x.min()), float(x.max())
    if c2 >= 0.5:
        raise BoundError("constant is only defined for eps_i / s_i < 1/2")
    c_eps = math.sqrt(float(np.mean(e**2))) / _geo_mean(e)
    return 2.0 * c_eps * c2 / (c1 * (1.0 - 2.0 * c2))
