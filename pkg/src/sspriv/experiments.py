"""Synthetic data, mechanism sweeps, and tradeoff-table I/O."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import rng as rngs
from .bounds import lower_bound_group, lower_bound_inter, lower_bound_union, surrogate_bound_line
from .distortion import EXACT_CAP, w2_empirical_exact, w2_empirical_sliced
from .mechanisms import release
from .model import (
    Dataset,
    GroupPartition,
    LpSpec,
    MechanismConfig,
    ModelError,
    SecretSpec,
    dataset_secret_values,
)
from .privacy import analytic_privacy_alg1, surrogate_from_secrets

FORMAT_NAME = "sspriv-tradeoff"
FORMAT_VERSION = 1

DEFAULT_MEANS = (15.0, 68.0, 54.0)
DEFAULT_EPS = (1.0, 4.0, 3.0)
DEFAULT_GROUPS = ((0, 1), (2,))
DEFAULT_GRIDS = {
    # alg1: interval length as a multiple of each secret's tolerance
    "alg1": (2.0, 3.0, 4.0, 6.0, 8.0, 12.0),
    "ap": (0.5, 1.0, 2.0, 4.0, 8.0),
    "distp": (0.5, 1.0, 2.0, 4.0, 8.0),
    "dp-hist": (0.5, 1.0, 2.0, 4.0, 8.0),
}
DP_HIST_NOISE = 5.0
MECHANISMS = tuple(DEFAULT_GRIDS)


class SweepError(ModelError):
    pass


def generate_synthetic(profile: str = "wwt-like", m: int = 2000, t: int = 5,
                       secret_means=DEFAULT_MEANS, seed: int = 0) -> Dataset:
    """Independent Gaussian columns standing in for daily page-view counts.

    The first ``len(secret_means)`` columns get the given means and an SD of
    20% of the mean (at least 1); remaining columns have mean 40, SD 8.
    """
    if profile != "wwt-like":
        raise SweepError(f"unknown profile {profile!r}")
    if m < 2:
        raise SweepError("m must be >= 2")
    means = np.full(t, 40.0)
    sds = np.full(t, 8.0)
    secret_means = np.asarray(secret_means, dtype=float)
    if secret_means.size > t:
        raise SweepError(f"{secret_means.size} secret means do not fit in t={t} columns")
    means[: secret_means.size] = secret_means
    sds[: secret_means.size] = np.maximum(0.2 * np.abs(secret_means), 1.0)
    gen = rngs.stream(seed, rngs.SYNTHETIC)
    x = means + sds * gen.standard_normal((m, t))
    return Dataset(x, [f"day{j}" for j in range(t)])


def default_spec(n: int = 3) -> SecretSpec:
    return SecretSpec([f"mean:{i}" for i in range(n)], DEFAULT_EPS[:n])


_INT_FIELDS = {"seed"}
_STR_FIELDS = {"mechanism", "estimator"}


@dataclass(frozen=True)
class TradeoffRecord:
    mechanism: str
    hyper: float
    seed: int
    distortion: float
    distortion_sliced: float
    estimator: str
    privacy_union: float
    privacy_inter: float
    privacy_group: float
    privacy_l1: float
    privacy_linf: float
    line_union: float
    line_inter: float
    line_group: float
    line_l1: float
    line_linf: float
    analytic_union: float | None = None
    analytic_inter: float | None = None
    analytic_group: float | None = None
    bound_union: float | None = None
    bound_inter: float | None = None
    bound_group: float | None = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and f.name not in _STR_FIELDS:
                object.__setattr__(self, f.name, int(v) if f.name in _INT_FIELDS else float(v))

    def surrogate_bound(self, metric: str) -> float:
        """``-c * privacy`` for one metric (the distortion floor)."""
        return -getattr(self, f"line_{metric}") * getattr(self, f"privacy_{metric}")


FIELDS = [f.name for f in fields(TradeoffRecord)]


def _config_for(mechanism: str, hyper: float, spec: SecretSpec, g: np.ndarray) -> MechanismConfig:
    if mechanism in ("alg1", "dataset"):
        lengths = hyper * spec.tolerances
        anchors = np.where(g >= 0, 0.0, np.floor(g) - lengths)
        return MechanismConfig(lengths, anchors)
    dummy = dict(lengths=spec.tolerances, anchors=np.zeros(spec.d))
    if mechanism == "ap":
        return MechanismConfig(**dummy, noise_sd=hyper)
    if mechanism == "distp":
        return MechanismConfig(**dummy, noise_scale=hyper)
    if mechanism == "dp-hist":
        return MechanismConfig(**dummy, bin_width=hyper, noise_scale=DP_HIST_NOISE)
    raise SweepError(f"unknown sweep mechanism {mechanism!r}")


def _point_seed(base: int, mech_idx: int, h_idx: int, rep: int) -> int:
    ss = np.random.SeedSequence([int(base), rngs.SWEEP, mech_idx, h_idx, rep])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def run_sweep(data: Dataset, spec: SecretSpec | None = None, mechanisms=MECHANISMS,
              grids: dict | None = None, partition: GroupPartition | None = None,
              seed: int = 0, repeats: int = 1, subsample: int = EXACT_CAP,
              n_projections: int = 64, workers: int = 1) -> list[TradeoffRecord]:
    """One record per (mechanism, hyperparameter, repeat), in grid order.

    Distortion is exact W2 on a fixed seeded subsample of at most
    ``subsample`` rows (the same rows in both datasets); the sliced estimate
    on all rows is recorded alongside. Surrogate privacy uses all rows.
    """
    spec = spec or default_spec()
    spec.check_dimension(data.t)
    partition = partition or GroupPartition(DEFAULT_GROUPS)
    partition.check_within(spec.d)
    grids = {**DEFAULT_GRIDS, **(grids or {})}
    l1 = LpSpec.matching(1, spec.tolerances)
    linf = LpSpec.matching(math.inf, spec.tolerances)
    eps = spec.tolerances
    lines = dict(
        line_union=surrogate_bound_line("union", eps),
        line_inter=surrogate_bound_line("inter", eps),
        line_group=surrogate_bound_line("group", eps, partition),
        line_l1=surrogate_bound_line("lp", eps, lp=l1),
        line_linf=surrogate_bound_line("lp", eps, lp=linf),
    )
    g = dataset_secret_values(data, spec)
    m = data.m
    k = min(m, subsample)
    rows = np.sort(rngs.stream(seed, rngs.SUBSAMPLE).choice(m, size=k, replace=False))
    x_sub = data.samples[rows]
    full_cover = partition.covers(spec.d)

    jobs = []
    for mi, mech in enumerate(mechanisms):
        if mech not in grids:
            raise SweepError(f"no hyperparameter grid for mechanism {mech!r}")
        for hi, h in enumerate(grids[mech]):
            for rep in range(repeats):
                jobs.append((mech, float(h), _point_seed(seed, mi, hi, rep)))

    def run(job):
        mech, h, s = job
        try:
            cfg = _config_for(mech, h, spec, g)
            name = "dataset" if mech == "alg1" else mech
            out = release(name, data, spec, cfg, s).dataset
        except ModelError as exc:
            raise SweepError(f"{mech} at hyperparameter {h}: {exc}") from exc
        g_hat = dataset_secret_values(out, spec)
        priv = dict(
            privacy_union=surrogate_from_secrets(g, g_hat, eps, "union"),
            privacy_inter=surrogate_from_secrets(g, g_hat, eps, "inter"),
            privacy_group=surrogate_from_secrets(g, g_hat, eps, "group", partition),
            privacy_l1=surrogate_from_secrets(g, g_hat, eps, "lp", lp=l1),
            privacy_linf=surrogate_from_secrets(g, g_hat, eps, "lp", lp=linf),
        )
        extra = {}
        if mech == "alg1" and np.all(2 * eps <= cfg.lengths * (1 + 1e-12)):
            extra["analytic_union"] = analytic_privacy_alg1(spec, cfg, "union").value
            extra["analytic_inter"] = analytic_privacy_alg1(spec, cfg, "inter").value
            if full_cover:
                extra["analytic_group"] = analytic_privacy_alg1(spec, cfg, "group", partition).value
            extra.update(_bounds_at(extra, eps, partition))
        return TradeoffRecord(
            mechanism=mech,
            hyper=h,
            seed=s,
            distortion=w2_empirical_exact(x_sub, out.samples[rows]),
            distortion_sliced=w2_empirical_sliced(data, out, n_projections, s),
            estimator=f"exact-subsample(m={k})",
            **priv,
            **lines,
            **extra,
        )

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def _bounds_at(analytic: dict, eps, partition) -> dict:
    out = {}
    for metric, fn in (("union", lower_bound_union), ("inter", lower_bound_inter)):
        T = analytic.get(f"analytic_{metric}")
        if T is not None and 0 < T < 1:
            out[f"bound_{metric}"] = fn(T, eps)
    T = analytic.get("analytic_group")
    if T is not None and 0 < T < 1:
        out["bound_group"] = lower_bound_group(T, eps, partition)
    return out


# I/O ------------------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name: str, text):
    if text is None or text == "":
        return None
    if name in _STR_FIELDS:
        return str(text)
    if name in _INT_FIELDS:
        return int(text)
    return float(text)


def emit(records, dest, fmt: str = "csv") -> None:
    """Write records with a version header to a path or text stream.

    ``fmt`` is ``csv`` or ``jsonl``.
    """
    if fmt not in ("csv", "jsonl", "json-lines"):
        raise SweepError(f"unknown output format {fmt!r}")
    if hasattr(dest, "write"):
        _emit(records, dest, fmt)
        return
    with Path(dest).open("w", newline="") as fh:
        _emit(records, fh, fmt)


def _emit(records, fh, fmt: str) -> None:
    if fmt == "csv":
        fh.write(f"# {FORMAT_NAME} v{FORMAT_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIELDS)
        for r in records:
            writer.writerow([_cell(getattr(r, f)) for f in FIELDS])
    else:
        fh.write(json.dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION}) + "\n")
        for r in records:
            fh.write(json.dumps(asdict(r)) + "\n")


def read_records(path) -> list[TradeoffRecord]:
    """Read a file written by :func:`emit` (format detected from the header)."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SweepError(f"{path} is empty")
    head = lines[0]
    if head.startswith("#"):
        if head.strip() != f"# {FORMAT_NAME} v{FORMAT_VERSION}":
            raise SweepError(f"unsupported header {head!r}")
        reader = csv.reader(lines[1:])
        names = next(reader)
        return [TradeoffRecord(**{n: _parse(n, v) for n, v in zip(names, row)}) for row in reader]
    meta = json.loads(head)
    if meta.get("format") != FORMAT_NAME or meta.get("version") != FORMAT_VERSION:
        raise SweepError(f"unsupported header {head!r}")
    return [TradeoffRecord(**json.loads(line)) for line in lines[1:] if line.strip()]
