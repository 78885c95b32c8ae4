"""Wasserstein-2 distortion: Gaussian closed forms, empirical estimators,
and the worst-case distortion of the quantization mechanisms."""

from __future__ import annotations

import math

import numpy as np

from . import _backend
from . import rng as rngs
from .model import (
    MEAN,
    Dataset,
    Gaussian2DParams,
    GaussianDiagParams,
    GaussianGeneralParams,
    MechanismConfig,
    ModelError,
    SecretSpec,
)

EXACT_CAP = 512


class DistortionError(ModelError):
    pass


def w2_gaussian_diag(a: GaussianDiagParams, b: GaussianDiagParams) -> float:
    if a.k != b.k:
        raise DistortionError(f"dimension mismatch: {a.k} vs {b.k}")
    return float(np.sqrt(np.sum((a.means - b.means) ** 2) + np.sum((a.stds - b.stds) ** 2)))


def w2_gaussian_2d(p: Gaussian2DParams, q: Gaussian2DParams) -> float:
    # The textbook form sum(lambda) - 2*sqrt(X) cancels catastrophically when
    # the covariances are close; this rearrangement is exact and keeps every
    # term non-negative.
    sin2 = math.sin(p.alpha - q.alpha) ** 2
    spread = (p.lambda1 - p.lambda2) * (q.lambda1 - q.lambda2)
    pp = p.a * q.a + p.b * q.b
    x = max(pp * pp - sin2 * spread, 0.0)
    cross = 2.0 * sin2 * spread / (pp + math.sqrt(x))
    sq = (
        (p.mu1 - q.mu1) ** 2
        + (p.mu2 - q.mu2) ** 2
        + (p.a - q.a) ** 2
        + (p.b - q.b) ** 2
        + cross
    )
    return math.sqrt(max(sq, 0.0))


def w2_gaussian_general(p: GaussianGeneralParams, q: GaussianGeneralParams) -> float:
    """Bures form via symmetric eigendecompositions."""
    if p.k != q.k:
        raise DistortionError(f"dimension mismatch: {p.k} vs {q.k}")
    root = (p.rotation * p.eig_sqrt) @ p.rotation.T
    inner = root @ q.covariance @ root
    ev = np.clip(np.linalg.eigvalsh((inner + inner.T) / 2), 0.0, None)
    sq = (
        np.sum((p.means - q.means) ** 2)
        + np.sum(p.eig_sqrt**2)
        + np.sum(q.eig_sqrt**2)
        - 2.0 * np.sum(np.sqrt(ev))
    )
    return float(math.sqrt(max(sq, 0.0)))


def w2_gaussian(p, q) -> float:
    """Dispatch on parameter family; mixed 2-D/general inputs compare as general."""
    if isinstance(p, GaussianDiagParams) and isinstance(q, GaussianDiagParams):
        return w2_gaussian_diag(p, q)
    if isinstance(p, Gaussian2DParams) and isinstance(q, Gaussian2DParams):
        return w2_gaussian_2d(p, q)
    return w2_gaussian_general(_as_general(p), _as_general(q))


def _as_general(p) -> GaussianGeneralParams:
    if isinstance(p, GaussianGeneralParams):
        return p
    if isinstance(p, Gaussian2DParams):
        return p.to_general()
    if isinstance(p, GaussianDiagParams):
        return GaussianGeneralParams(p.means, p.stds, np.eye(p.k))
    raise DistortionError(f"unsupported parameter type {type(p).__name__}")


def lemma_c2_lower_bound(p: Gaussian2DParams, q: Gaussian2DParams) -> float:
    """sqrt(dmu^2 + dsigma1^2 + dsigma2^2): W2 between the diagonal marginals."""
    return math.sqrt(
        (p.mu1 - q.mu1) ** 2
        + (p.mu2 - q.mu2) ** 2
        + (p.sigma1 - q.sigma1) ** 2
        + (p.sigma2 - q.sigma2) ** 2
    )


def _samples(x) -> np.ndarray:
    arr = x.samples if isinstance(x, Dataset) else np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    a, b = _samples(x), _samples(y)
    if a.shape[0] != b.shape[0]:
        raise DistortionError(f"sample counts differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[1] != b.shape[1]:
        raise DistortionError(f"dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    return a, b


def _sorted_sq(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((np.sort(a) - np.sort(b)) ** 2))


def w2_empirical_exact(x, y, method: str = "auto") -> float:
    """Exact W2 between two equal-size empirical distributions.

    ``method="sorted"`` (1-D only) matches order statistics;
    ``"assignment"`` solves the min-cost perfect matching on squared
    Euclidean costs; ``"auto"`` picks sorted for 1-D data.
    """
    a, b = _pair(x, y)
    m, t = a.shape
    if m > EXACT_CAP:
        raise DistortionError(
            f"m={m} exceeds the exact-W2 cap of {EXACT_CAP}; use w2_empirical_sliced"
        )
    if method == "auto":
        method = "sorted" if t == 1 else "assignment"
    if method == "sorted":
        if t != 1:
            raise DistortionError("sorted matching is only optimal for 1-D data")
        return math.sqrt(_sorted_sq(a[:, 0], b[:, 0]))
    if method != "assignment":
        raise DistortionError(f"unknown method {method!r}")
    cost = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)
    _, total = _backend.lsap(cost)
    return math.sqrt(max(total, 0.0) / m)


def w2_empirical_sliced(x, y, n_projections: int = 64, seed: int = 0) -> float:
    """Root-mean-square of 1-D W2 over random unit directions."""
    a, b = _pair(x, y)
    if n_projections < 1:
        raise DistortionError("n_projections must be >= 1")
    t = a.shape[1]
    if t == 1:
        return math.sqrt(_sorted_sq(a[:, 0], b[:, 0]))
    dirs = rngs.stream(seed, rngs.SLICED).normal(size=(n_projections, t))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pa = np.sort(a @ dirs.T, axis=0)
    pb = np.sort(b @ dirs.T, axis=0)
    return float(math.sqrt(np.mean((pa - pb) ** 2)))


def mechanism_distortion(mech: str, cfg: MechanismConfig, spec: SecretSpec) -> float:
    """Worst-case W2 of a quantization mechanism (the sup, not a sample)."""
    cfg.check_spec(spec)
    if mech in ("alg1", "dataset"):
        return float(np.sqrt(np.sum(cfg.lengths**2)))
    if mech in ("alg2", "alg3"):
        mean_part = sum(cfg.lengths[i] ** 2 for i, t in enumerate(spec.targets) if t.kind == MEAN)
        std_part = 0.0
        if spec.has_std:
            if cfg.eig_lengths is None:
                raise DistortionError(f"{mech}: SD secret present but eig_lengths missing")
            std_part = float(np.sum(cfg.eig_lengths**2))
        return 0.5 * math.sqrt(mean_part + std_part)
    raise DistortionError(f"no closed-form distortion for mechanism {mech!r}")
