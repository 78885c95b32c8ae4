"""Data release mechanisms.

Quantization mechanisms snap each secret parameter to a bin of a fixed grid:
``alg1`` releases a uniformly random point of the bin, ``alg2``/``alg3``
release the bin midpoint. ``release_dataset`` applies the ``alg1`` rule to
statistics estimated from data and shifts/rescales the samples to match.
The three baselines perturb samples (Gaussian / Laplace noise) or resample
from a noisy histogram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngs
from .model import (
    MEAN,
    MIDPOINT,
    RANDOM_OFFSET,
    STD,
    Dataset,
    Gaussian2DParams,
    GaussianDiagParams,
    GaussianGeneralParams,
    MechanismConfig,
    ModelError,
    SecretSpec,
    estimate_params,
    secret_values,
)

QUANTIZATION = ("alg1", "alg2", "alg3", "dataset")
BASELINES = ("ap", "distp", "dp-hist")


class MechanismError(ModelError):
    """A mechanism cannot be applied to the given input/config."""


@dataclass(frozen=True, eq=False)
class ReleaseOutcome:
    params: object | None
    dataset: Dataset | None
    seed: int | None
    mechanism: str
    config: dict
    secrets: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"mechanism": self.mechanism, "seed": self.seed, "config": self.config}
        if self.params is not None:
            out["params"] = self.params.to_dict()
        if self.secrets is not None:
            out["released_secrets"] = self.secrets.tolist()
        return out


def _check_mode(cfg: MechanismConfig, mode: str, mechanism: str) -> None:
    if cfg.mode != mode:
        raise MechanismError(f"{mechanism} needs mode {mode!r}, config has {cfg.mode!r}")


def _check_above(values, anchors, labels) -> None:
    below = np.flatnonzero(values < anchors)
    if below.size:
        i = int(below[0])
        raise MechanismError(
            f"{labels[i]} = {values[i]:g} lies below its anchor {anchors[i]:g}"
        )


def bin_index(values, anchors, lengths) -> np.ndarray:
    return np.floor((np.asarray(values, dtype=float) - anchors) / lengths)


def quantize_random(values, anchors, lengths, u) -> np.ndarray:
    """``anchor + floor((x - anchor)/s) * s + u * s`` with ``u`` in [0, 1).

    The result is nudged by at most a few ulps so that recomputing its bin
    index in floating point always gives back the input's bin.
    """
    anchors = np.asarray(anchors, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    bins = bin_index(values, anchors, lengths)
    out = anchors + bins * lengths + np.asarray(u) * lengths
    # rounding in (out - anchor) can cost more than one ulp of out, so the
    # step doubles until the bin index settles
    for it in range(64):
        k = bin_index(out, anchors, lengths)
        over, under = k > bins, k < bins
        if not (over.any() or under.any()):
            break
        step = np.spacing(np.abs(out)) * 2.0**it
        out = np.where(over, out - step, np.where(under, out + step, out))
    return out


def quantize_midpoint(values, anchors, lengths) -> np.ndarray:
    return anchors + (bin_index(values, anchors, lengths) + 0.5) * lengths


def offset_draws(seed: int, d: int) -> np.ndarray:
    """Uniform [0, 1) offsets; secret ``i`` always gets draw ``i`` of the seed's stream."""
    return rngs.stream(seed, rngs.OFFSETS).random(d)


def release_alg1(params: GaussianDiagParams, spec: SecretSpec, cfg: MechanismConfig,
                 seed: int) -> ReleaseOutcome:
    """Random-offset quantization of each secret of a diagonal Gaussian."""
    _check_mode(cfg, RANDOM_OFFSET, "alg1")
    cfg.check_spec(spec)
    g = secret_values(params, spec)
    labels = [str(t) for t in spec.targets]
    _check_above(g, cfg.anchors, labels)
    for i, t in enumerate(spec.targets):
        if t.kind == STD and cfg.anchors[i] < 0:
            raise MechanismError(f"std secret {t} needs a non-negative anchor")
    released = quantize_random(g, cfg.anchors, cfg.lengths, offset_draws(seed, spec.d))
    means, stds = params.means.copy(), params.stds.copy()
    for i, t in enumerate(spec.targets):
        if t.kind == MEAN:
            means[t.index] = released[i]
        else:
            if released[i] <= 0:
                raise MechanismError(f"released {t} = {released[i]:g} is not positive")
            stds[t.index] = released[i]
    return ReleaseOutcome(
        GaussianDiagParams(means, stds), None, int(seed), "alg1", cfg.to_dict(), released
    )


def _need_eig(cfg: MechanismConfig, k: int, mechanism: str) -> None:
    if cfg.eig_lengths is None or cfg.eig_lengths.size != k:
        raise MechanismError(
            f"{mechanism}: an SD secret requires eig_lengths/eig_anchors for all {k} eigenvalues"
        )


def release_alg2(params: Gaussian2DParams, spec: SecretSpec, cfg: MechanismConfig) -> ReleaseOutcome:
    """Midpoint quantization of a bivariate Gaussian."""
    _check_mode(cfg, MIDPOINT, "alg2")
    cfg.check_spec(spec)
    spec.check_dimension(2)
    mu = [params.mu1, params.mu2]
    for i, t in enumerate(spec.targets):
        if t.kind == MEAN:
            s, lo = float(cfg.lengths[i]), float(cfg.anchors[i])
            if mu[t.index] < lo:
                raise MechanismError(f"mu{t.index + 1} = {mu[t.index]:g} lies below its anchor {lo:g}")
            mu[t.index] = lo + (math.floor((mu[t.index] - lo) / s) + 0.5) * s
    a, b = params.a, params.b
    if spec.has_std:
        _need_eig(cfg, 2, "alg2")
        (sa, sb), (la, lb) = cfg.eig_lengths, cfg.eig_anchors
        if a < la or b < lb:
            raise MechanismError("sqrt-eigenvalue lies below its anchor")
        a = la + (math.floor((a - la) / sa) + 0.5) * sa
        b = lb + (math.floor((b - lb) / sb) + 0.5) * sb
        if a <= 0 or b <= 0:
            raise MechanismError("released sqrt-eigenvalue is not positive")
        lam1, lam2 = a * a, b * b
    else:
        lam1, lam2 = params.lambda1, params.lambda2
    out = Gaussian2DParams(mu[0], mu[1], lam1, lam2, params.alpha)
    return ReleaseOutcome(out, None, None, "alg2", cfg.to_dict(), secret_values(out, spec))


def release_alg3(params: GaussianGeneralParams, spec: SecretSpec, cfg: MechanismConfig) -> ReleaseOutcome:
    """Midpoint quantization of a k-dimensional Gaussian; the eigenbasis passes through."""
    _check_mode(cfg, MIDPOINT, "alg3")
    cfg.check_spec(spec)
    spec.check_dimension(params.k)
    means = params.means.copy()
    for i, t in enumerate(spec.targets):
        if t.kind == MEAN:
            if means[t.index] < cfg.anchors[i]:
                raise MechanismError(
                    f"mean {t.index} = {means[t.index]:g} lies below its anchor {cfg.anchors[i]:g}"
                )
            means[t.index] = quantize_midpoint(means[t.index], cfg.anchors[i], cfg.lengths[i])
    eig = params.eig_sqrt
    if spec.has_std:
        _need_eig(cfg, params.k, "alg3")
        _check_above(eig, cfg.eig_anchors, [f"eig_sqrt[{j}]" for j in range(params.k)])
        eig = quantize_midpoint(eig, cfg.eig_anchors, cfg.eig_lengths)
        if np.any(eig <= 0):
            raise MechanismError("released sqrt-eigenvalue is not positive")
    out = GaussianGeneralParams(means, eig, params.rotation)
    return ReleaseOutcome(out, None, None, "alg3", cfg.to_dict(), secret_values(out, spec))


def release_dataset(data: Dataset, spec: SecretSpec, cfg: MechanismConfig, seed: int) -> ReleaseOutcome:
    """Estimate secrets from data, quantize them with random offsets, and
    affinely map every affected column onto the released statistics."""
    _check_mode(cfg, RANDOM_OFFSET, "dataset")
    cfg.check_spec(spec)
    spec.check_dimension(data.t)
    est = estimate_params(data)
    g = np.array([est.means[t.index] if t.kind == MEAN else est.stds[t.index] for t in spec.targets])
    labels = [f"{t.kind} of column {data.labels[t.index]!r}" for t in spec.targets]
    for i, t in enumerate(spec.targets):
        if t.kind == STD and est.degenerate[t.index]:
            raise MechanismError(f"column {data.labels[t.index]!r} has zero variance; its SD cannot be released")
        if t.kind == STD and cfg.anchors[i] < 0:
            raise MechanismError(f"std secret {t} needs a non-negative anchor")
    _check_above(g, cfg.anchors, labels)
    released = quantize_random(g, cfg.anchors, cfg.lengths, offset_draws(seed, spec.d))

    mu_r = est.means.copy()
    sd_r = est.stds.copy()
    touched = np.zeros(data.t, dtype=bool)
    scaled = np.zeros(data.t, dtype=bool)
    for i, t in enumerate(spec.targets):
        touched[t.index] = True
        if t.kind == MEAN:
            mu_r[t.index] = released[i]
        else:
            if released[i] <= 0:
                raise MechanismError(f"released {t} = {released[i]:g} is not positive")
            sd_r[t.index] = released[i]
            scaled[t.index] = True

    x = data.samples
    out = np.array(x, copy=True)
    cols = np.flatnonzero(touched)
    shift_only = cols[~scaled[cols]]
    if shift_only.size:
        out[:, shift_only] = x[:, shift_only] + (mu_r[shift_only] - est.means[shift_only])
    rescale = cols[scaled[cols]]
    if rescale.size:
        ratio = sd_r[rescale] / est.stds[rescale]
        out[:, rescale] = ratio * (x[:, rescale] - est.means[rescale]) + mu_r[rescale]
    released_data = Dataset(out, data.labels)
    params = None
    if not np.any(est.degenerate):
        params = GaussianDiagParams(mu_r, sd_r)
    return ReleaseOutcome(params, released_data, int(seed), "dataset", cfg.to_dict(), released)


def _noise_outcome(data, noise, seed, name, cfg) -> ReleaseOutcome:
    return ReleaseOutcome(None, Dataset(data.samples + noise, data.labels), int(seed), name, cfg)


def release_ap_gaussian(data: Dataset, noise_sd: float, seed: int) -> ReleaseOutcome:
    """Add i.i.d. N(0, noise_sd^2) noise to every entry."""
    if not noise_sd >= 0:
        raise MechanismError("noise_sd must be non-negative")
    noise = rngs.stream(seed, rngs.GAUSS_NOISE).normal(0.0, 1.0, data.samples.shape) * noise_sd
    return _noise_outcome(data, noise, seed, "ap", {"noise_sd": float(noise_sd)})


def release_distp_laplace(data: Dataset, noise_scale: float, seed: int) -> ReleaseOutcome:
    """Add i.i.d. Laplace(0, noise_scale) noise to every entry."""
    if not noise_scale >= 0:
        raise MechanismError("noise_scale must be non-negative")
    noise = rngs.stream(seed, rngs.LAPLACE_NOISE).laplace(0.0, 1.0, data.samples.shape) * noise_scale
    return _noise_outcome(data, noise, seed, "distp", {"noise_scale": float(noise_scale)})


def release_dp_histogram(data: Dataset, bin_width: float, noise_scale: float, seed: int) -> ReleaseOutcome:
    """Per column: noisy histogram over [min, max], then resample m points.

    Negative noisy counts are clipped to zero before renormalising. Samples
    are uniform within their drawn bin; the last bin ends at the column max.
    """
    if not bin_width > 0:
        raise MechanismError("bin_width must be positive")
    if not noise_scale >= 0:
        raise MechanismError("noise_scale must be non-negative")
    x = data.samples
    m, t = x.shape
    out = np.empty_like(x)
    histograms = []
    for j in range(t):
        col = x[:, j]
        lo, hi = float(col.min()), float(col.max())
        n_bins = max(1, math.ceil((hi - lo) / bin_width))
        edges = lo + bin_width * np.arange(n_bins + 1)
        edges[-1] = hi
        if hi > lo:
            counts = np.histogram(col, bins=edges)[0].astype(float)
        else:
            counts = np.array([float(m)])
        gen = rngs.stream(seed, rngs.HISTOGRAM, j)
        noisy = counts + gen.laplace(0.0, 1.0, n_bins) * noise_scale if noise_scale > 0 else counts.copy()
        noisy = np.clip(noisy, 0.0, None)
        total = noisy.sum()
        if total <= 0:
            raise MechanismError(
                f"column {data.labels[j]!r}: noisy histogram is empty after clipping (noise too large)"
            )
        probs = noisy / total
        picks = gen.choice(n_bins, size=m, p=probs)
        left, right = edges[picks], edges[picks + 1]
        out[:, j] = left + (right - left) * gen.random(m)
        histograms.append({"edges": edges, "counts": counts, "released": probs})
    cfg = {"bin_width": float(bin_width), "noise_scale": float(noise_scale)}
    return ReleaseOutcome(None, Dataset(out, data.labels), int(seed), "dp-hist", cfg,
                          extras={"histograms": histograms})


def release(mechanism: str, source, spec: SecretSpec | None, cfg: MechanismConfig, seed: int = 0) -> ReleaseOutcome:
    """Dispatch by mechanism name (as used by the CLI and the sweep runner)."""
    if mechanism == "alg1":
        return release_alg1(source, spec, cfg, seed)
    if mechanism == "alg2":
        return release_alg2(source, spec, cfg)
    if mechanism == "alg3":
        return release_alg3(source, spec, cfg)
    if mechanism == "dataset":
        return release_dataset(source, spec, cfg, seed)
    if mechanism == "ap":
        return release_ap_gaussian(source, _required(cfg.noise_sd, "noise_sd"), seed)
    if mechanism == "distp":
        return release_distp_laplace(source, _required(cfg.noise_scale, "noise_scale"), seed)
    if mechanism == "dp-hist":
        return release_dp_histogram(
            source, _required(cfg.bin_width, "bin_width"), _required(cfg.noise_scale, "noise_scale"), seed
        )
    raise MechanismError(f"unknown mechanism {mechanism!r}")


def _required(value, name):
    if value is None:
        raise MechanismError(f"config is missing {name}")
    return float(value)
