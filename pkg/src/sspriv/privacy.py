"""Privacy metrics for multi-secret releases.

Four success events are supported for an attacker guess ``h`` of the secret
vector ``g`` with tolerances ``eps``:

* ``union``: some ``|h_i - g_i| <= eps_i``
* ``inter``: every ``|h_i - g_i| <= eps_i``
* ``group``: every secret of at least one group is hit
* ``lp``:    ``||h - g||_p <= eps_p``

Analytic values hold for the random-offset mechanism under independent
uniform priors. Monte-Carlo estimates use either the posterior-bin attacker
(optimal for that mechanism) or the grid family of constant attackers, which
ignores the release altogether and so works against any mechanism.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from . import rng as rngs
from ._numeric import ceil_tol
from .mechanisms import quantize_midpoint, quantize_random
from .model import (
    MEAN,
    MIDPOINT,
    RANDOM_OFFSET,
    STD,
    Dataset,
    GroupPartition,
    LpSpec,
    MechanismConfig,
    ModelError,
    PriorSpec,
    SecretSpec,
    dataset_secret_values,
)

METRICS = ("union", "inter", "group", "lp")
_ALIASES = {"intersection": "inter", "l_p": "lp", "ellp": "lp"}
_CODES = {"union": 0, "inter": 1, "group": 2, "lp": 3}
Z95 = 1.959963984540054
BLOCK = 8192
MAX_FAMILY = 2_000_000


class PrivacyError(ModelError):
    pass


def metric_name(metric: str) -> str:
    name = _ALIASES.get(metric, metric)
    if name not in METRICS:
        raise PrivacyError(f"unknown metric {metric!r}; choose from {METRICS}")
    return name


@dataclass(frozen=True)
class PrivacyReport:
    metric: str
    value: float
    method: str
    half_width: float | None = None
    upper_bound: bool = False
    attacker: str | None = None
    n_trials: int | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"metric": self.metric, "value": self.value, "method": self.method}
        for key in ("half_width", "attacker", "n_trials"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.upper_bound:
            out["upper_bound"] = True
        out["config"] = self.config
        return out


def _need_partition(metric, partition, d, full=False):
    if metric != "group":
        return None
    if partition is None:
        raise PrivacyError("group metric needs a partition")
    partition.check_within(d)
    if full and not partition.covers(d):
        raise PrivacyError(f"partition {partition.groups} does not cover all {d} secrets")
    return partition


def _need_lp(metric, lp):
    if metric == "lp" and lp is None:
        raise PrivacyError("lp metric needs an LpSpec")
    return lp


def analytic_privacy_alg1(spec: SecretSpec, cfg: MechanismConfig, metric: str,
                          partition: GroupPartition | None = None,
                          lp: LpSpec | None = None) -> PrivacyReport:
    """Closed-form privacy of the random-offset mechanism under uniform priors.

    For ``lp`` the returned value is an upper bound.
    """
    metric = metric_name(metric)
    if cfg.mode != RANDOM_OFFSET:
        raise PrivacyError("analytic formulas are for the random-offset mechanism")
    cfg.check_analytic(spec)
    r = np.minimum(2.0 * spec.tolerances / cfg.lengths, 1.0)
    upper = False
    if metric == "union":
        value = 1.0 - np.prod(1.0 - r)
    elif metric == "inter":
        value = np.prod(r)
    elif metric == "group":
        partition = _need_partition(metric, partition, spec.d, full=True)
        miss = [1.0 - np.prod(r[list(g)]) for g in partition.groups]
        value = 1.0 - np.prod(miss)
    else:
        lp = _need_lp(metric, lp)
        rp = np.minimum(2.0 * lp.eps_p / (lp.dim_root(spec.d) * cfg.lengths), 1.0)
        value = 1.0 - np.prod(1.0 - rp)
        upper = True
    return PrivacyReport(metric, float(value), "analytic", upper_bound=upper,
                         config=_echo(spec, cfg, partition, lp))


def _echo(spec, cfg=None, partition=None, lp=None) -> dict:
    out = {"spec": spec.to_dict()}
    if cfg is not None:
        out["mechanism"] = cfg.to_dict()
    if partition is not None:
        out["groups"] = [list(g) for g in partition.groups]
    if lp is not None:
        out["p"] = lp.p
        out["eps_p"] = lp.eps_p
    return out


def surrogate_from_secrets(g, g_hat, eps, metric: str, partition: GroupPartition | None = None,
                           lp: LpSpec | None = None) -> float:
    """Negated normalized secret error; always <= 0."""
    metric = metric_name(metric)
    diff = np.abs(np.asarray(g_hat, dtype=float) - np.asarray(g, dtype=float))
    terms = -diff / np.asarray(eps, dtype=float)
    if metric == "union":
        value = terms.max()
    elif metric == "inter":
        value = terms.min()
    elif metric == "group":
        partition = _need_partition(metric, partition, terms.size)
        value = max(terms[list(grp)].min() for grp in partition.groups)
    else:
        lp = _need_lp(metric, lp)
        value = -lp.norm(diff) / lp.eps_p
    return float(value) + 0.0  # fold -0.0


def surrogate_privacy(x: Dataset, y: Dataset, spec: SecretSpec, metric: str,
                      partition: GroupPartition | None = None,
                      lp: LpSpec | None = None) -> PrivacyReport:
    metric = metric_name(metric)
    g = dataset_secret_values(x, spec)
    g_hat = dataset_secret_values(y, spec)
    value = surrogate_from_secrets(g, g_hat, spec.tolerances, metric, partition, lp)
    return PrivacyReport(metric, value, "surrogate", config=_echo(spec, None, partition, lp))


# attackers ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridFamily:
    """Constant attackers guessing segment midpoints ``lo_i + (v_i + 0.5) * 2 eps_i``.

    Attacker ``v`` (0-based, mixed radix, last secret fastest) never looks at
    the release.
    """

    lo: np.ndarray
    eps: np.ndarray
    n_seg: np.ndarray

    @property
    def size(self) -> int:
        return int(np.prod(self.n_seg))

    def index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(flat, tuple(self.n_seg)))

    def guess(self, v) -> np.ndarray:
        return self.lo + (np.asarray(v, dtype=float) + 0.5) * 2.0 * self.eps

    def midpoints(self, i: int) -> np.ndarray:
        return self.lo[i] + (np.arange(self.n_seg[i]) + 0.5) * 2.0 * self.eps[i]

    def success_counts(self, secrets, metric: str, partition=None, lp=None) -> np.ndarray:
        metric = metric_name(metric)
        g = np.ascontiguousarray(secrets, dtype=float)
        d = g.shape[1]
        partition = _need_partition(metric, partition, d)
        gid = partition.group_ids(d) if partition else np.full(d, -1, dtype=np.int64)
        n_groups = partition.beta if partition else 0
        p = lp.p if lp else 2.0
        eps_p = lp.eps_p if lp else 0.0
        return _backend.grid_success_counts(
            g, self.lo, self.eps, self.n_seg.astype(np.int64), _CODES[metric],
            gid, n_groups, p, eps_p,
        )


def grid_attackers(support: PriorSpec, spec: SecretSpec) -> GridFamily:
    if support.d != spec.d:
        raise PrivacyError(f"support covers {support.d} secrets but spec has {spec.d}")
    lo, hi = support.lo, support.hi
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise PrivacyError("grid attackers need a bounded support")
    n_seg = np.array(
        [max(1, ceil_tol((h - l) / (2.0 * e))) for l, h, e in zip(lo, hi, spec.tolerances)],
        dtype=np.int64,
    )
    return GridFamily(lo.copy(), spec.tolerances.copy(), n_seg)


def empirical_support(data: Dataset, spec: SecretSpec) -> PriorSpec:
    """Heuristic support when no prior is known: the column range widened by one eps
    for means; ``(0, half-range + eps]`` for SDs (an SD never exceeds half the range)."""
    lo, hi = [], []
    for t, e in zip(spec.targets, spec.tolerances):
        col = data.samples[:, t.index]
        cmin, cmax = float(col.min()), float(col.max())
        if t.kind == MEAN:
            lo.append(cmin - e)
            hi.append(cmax + e)
        else:
            lo.append(min(e, (cmax - cmin) / 2 + e) * 1e-6)
            hi.append((cmax - cmin) / 2 + e)
    return PriorSpec(lo, hi)


def _posterior_interval(released, cfg: MechanismConfig, prior: PriorSpec):
    """Bin containing each released value, intersected with the prior box."""
    k = np.floor((released - cfg.anchors) / cfg.lengths)
    left = cfg.anchors + k * cfg.lengths
    return np.maximum(left, prior.lo), np.minimum(left + cfg.lengths, prior.hi)


def _window_guesses(left, right, eps, n_guesses: int) -> np.ndarray:
    """``n_guesses`` adjacent eps-windows packed from the left end of each interval.

    Returns shape ``(n, d, n_guesses)``. Windows are kept inside the interval;
    if it is narrower than ``2 eps`` every guess is its midpoint.
    """
    j = np.arange(n_guesses)
    c = left[..., None] + eps[:, None] * (1.0 + 2.0 * j)
    c = np.minimum(c, (right - eps)[..., None])
    narrow = (right - left) <= 2.0 * eps
    mid = ((left + right) / 2)[..., None]
    return np.where(narrow[..., None], mid, c)


def _success(hit_dist, eps, metric, partition, lp, diff):
    hit = hit_dist <= eps
    if metric == "union":
        return hit.any(axis=1)
    if metric == "inter":
        return hit.all(axis=1)
    if metric == "group":
        ok = np.zeros(hit.shape[0], dtype=bool)
        for grp in partition.groups:
            ok |= hit[:, list(grp)].all(axis=1)
        return ok
    return lp.norm(diff, axis=1) <= lp.eps_p


def _simulate(mechanism: str, cfg: MechanismConfig, prior: PriorSpec, gen, n: int):
    g = prior.sample(gen, n)
    if mechanism == "alg1":
        released = quantize_random(g, cfg.anchors, cfg.lengths, gen.random(g.shape))
    elif mechanism == "midpoint":
        released = quantize_midpoint(g, cfg.anchors, cfg.lengths)
    else:
        raise PrivacyError(f"cannot simulate mechanism {mechanism!r}")
    return g, released


def _blocks(n_trials: int, block: int):
    starts = range(0, n_trials, block)
    return [(b, min(block, n_trials - s)) for b, s in enumerate(starts)]


def _run_blocks(fn, n_trials, block, workers):
    jobs = _blocks(n_trials, block)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    return parts


def _mc_mechanism(mechanism: str, cfg: MechanismConfig) -> str:
    if mechanism in ("alg1", "dataset"):
        if cfg.mode != RANDOM_OFFSET:
            raise PrivacyError("alg1 needs a random-offset config")
        return "alg1"
    if mechanism in ("alg2", "alg3", "midpoint"):
        if cfg.mode != MIDPOINT:
            raise PrivacyError(f"{mechanism} needs a midpoint config")
        return "midpoint"
    raise PrivacyError(f"Monte-Carlo simulation supports alg1/alg2/alg3, not {mechanism!r}")


def _report(metric, hits, n, attacker, spec, cfg, partition, lp, mechanism) -> PrivacyReport:
    p = hits / n
    hw = Z95 * math.sqrt(max(p * (1 - p), 0.0) / n)
    config = _echo(spec, cfg, partition, lp)
    config["mechanism_id"] = mechanism
    return PrivacyReport(metric, float(p), "monte-carlo", half_width=hw, attacker=attacker,
                         n_trials=int(n), config=config)


def monte_carlo_privacy(mechanism: str, cfg: MechanismConfig, prior: PriorSpec, spec: SecretSpec,
                        metric: str, partition: GroupPartition | None = None,
                        lp: LpSpec | None = None, attacker: str = "posterior-bin",
                        n_trials: int = 100_000, seed: int = 0, workers: int = 1,
                        block: int = BLOCK) -> PrivacyReport:
    """Estimate the success probability of a concrete attacker.

    Trials run in fixed blocks, each seeded from ``(seed, block index)``, so the
    estimate does not depend on ``workers``. For the grid family the reported
    value is the best attacker's success rate.
    """
    metric = metric_name(metric)
    if n_trials < 1000:
        raise PrivacyError("n_trials must be at least 1000")
    cfg.check_spec(spec)
    prior.check_spec(spec)
    partition = _need_partition(metric, partition, spec.d)
    lp = _need_lp(metric, lp)
    sim = _mc_mechanism(mechanism, cfg)
    eps = spec.tolerances

    if attacker == "posterior-bin":
        if sim != "alg1":
            raise PrivacyError("the posterior-bin attacker is only optimal for alg1")

        def run(b, n):
            gen = rngs.stream(seed, rngs.MONTE_CARLO, b)
            g, released = _simulate(sim, cfg, prior, gen, n)
            left, right = _posterior_interval(released, cfg, prior)
            guess = _window_guesses(left, right, eps, 1)[..., 0]
            diff = guess - g
            return int(_success(np.abs(diff), eps, metric, partition, lp, diff).sum())

        hits = sum(_run_blocks(run, n_trials, block, workers))
        return _report(metric, hits, n_trials, attacker, spec, cfg, partition, lp, mechanism)

    if attacker == "grid":
        family = grid_attackers(prior, spec)
        if family.size > MAX_FAMILY:
            raise PrivacyError(f"grid family has {family.size} attackers; limit is {MAX_FAMILY}")

        def run(b, n):
            gen = rngs.stream(seed, rngs.MONTE_CARLO, b)
            g, _ = _simulate(sim, cfg, prior, gen, n)
            return family.success_counts(g, metric, partition, lp)

        counts = np.sum(_run_blocks(run, n_trials, block, workers), axis=0)
        best = int(np.argmax(counts))
        rep = _report(metric, int(counts[best]), n_trials, attacker, spec, cfg, partition, lp, mechanism)
        rep.config["best_attacker"] = list(family.index(best))
        return rep

    raise PrivacyError(f"unknown attacker {attacker!r}")


def multi_shot_privacy(mechanism: str, cfg: MechanismConfig, prior: PriorSpec, spec: SecretSpec,
                       n_guesses: int, n_trials: int = 100_000, seed: int = 0,
                       workers: int = 1, block: int = BLOCK) -> PrivacyReport:
    """Union success of ``n_guesses`` guesses at one secret.

    The guesses are adjacent ``2 eps`` windows inside the posterior bin, so
    ``n_guesses=1`` reproduces the posterior-bin attacker trial for trial.
    """
    if spec.d != 1:
        raise PrivacyError("multi-shot privacy is defined for a single secret")
    if n_guesses < 1:
        raise PrivacyError("n_guesses must be >= 1")
    if n_trials < 1000:
        raise PrivacyError("n_trials must be at least 1000")
    cfg.check_spec(spec)
    prior.check_spec(spec)
    sim = _mc_mechanism(mechanism, cfg)
    if sim != "alg1":
        raise PrivacyError("multi-shot guesses use the posterior bin, which needs alg1")
    eps = spec.tolerances
    grid = max(1, ceil_tol(float(cfg.lengths[0] / (2 * eps[0]))))
    if n_guesses > grid:
        warnings.warn(f"n_guesses={n_guesses} exceeds the grid size {grid}; clamped", stacklevel=2)
        n_guesses = grid

    def run(b, n):
        gen = rngs.stream(seed, rngs.MONTE_CARLO, b)
        g, released = _simulate(sim, cfg, prior, gen, n)
        left, right = _posterior_interval(released, cfg, prior)
        guesses = _window_guesses(left, right, eps, n_guesses)[:, 0, :]
        return int((np.abs(guesses - g) <= eps[0]).any(axis=1).sum())

    hits = sum(_run_blocks(run, n_trials, block, workers))
    rep = _report("union", hits, n_trials, "multi-shot", spec, cfg, None, None, mechanism)
    rep.config["n_guesses"] = n_guesses
    return rep
