"""Domain types: distribution parameters, secrets, priors, datasets, configs.

All types are frozen after construction. Array-valued fields are stored as
read-only float64 numpy arrays so instances can be shared across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

MEAN = "mean"
STD = "std"
_KINDS = (MEAN, STD)

RANDOM_OFFSET = "random-offset"
MIDPOINT = "midpoint"


class ModelError(ValueError):
    """Invalid parameters, specs or datasets."""


class TargetError(ModelError):
    """A secret target that does not exist for the given parameters."""

    def __init__(self, target: "SecretTarget", message: str):
        super().__init__(f"secret target {target.kind}:{target.index}: {message}")
        self.target = target


def _frozen(values, name: str, ndim: int = 1) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ModelError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


def _set(obj, name, value):
    object.__setattr__(obj, name, value)


@dataclass(frozen=True, eq=False)
class GaussianDiagParams:
    """Gaussian with diagonal covariance: per-dimension means and SDs."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        _set(self, "means", _frozen(self.means, "means"))
        _set(self, "stds", _frozen(self.stds, "stds"))
        if self.means.size < 1 or self.means.shape != self.stds.shape:
            raise ModelError("means and stds must have equal length k >= 1")
        if np.any(self.stds <= 0):
            raise ModelError(f"stds must be positive, got {self.stds.tolist()}")

    @property
    def k(self) -> int:
        return int(self.means.size)

    def replace(self, means=None, stds=None) -> "GaussianDiagParams":
        return GaussianDiagParams(
            self.means if means is None else means,
            self.stds if stds is None else stds,
        )

    def __eq__(self, other):
        if not isinstance(other, GaussianDiagParams):
            return NotImplemented
        return np.array_equal(self.means, other.means) and np.array_equal(self.stds, other.stds)

    def to_dict(self) -> dict:
        return {"family": "diag-gaussian", "means": self.means.tolist(), "stds": self.stds.tolist()}


@dataclass(frozen=True)
class Gaussian2DParams:
    """Bivariate Gaussian given by means, covariance eigenvalues and rotation angle.

    The covariance is ``R(alpha) diag(lambda1, lambda2) R(alpha)^T`` with
    ``R(alpha) = [[cos, -sin], [sin, cos]]``.
    """

    mu1: float
    mu2: float
    lambda1: float
    lambda2: float
    alpha: float

    def __post_init__(self):
        for name in ("mu1", "mu2", "lambda1", "lambda2", "alpha"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ModelError(f"{name} must be finite")
            _set(self, name, value)
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ModelError("covariance eigenvalues must be positive")
        if not 0.0 <= self.alpha < math.pi:
            raise ModelError(f"alpha must lie in [0, pi), got {self.alpha}")

    @property
    def a(self) -> float:
        return math.sqrt(self.lambda1)

    @property
    def b(self) -> float:
        return math.sqrt(self.lambda2)

    @property
    def sigma1(self) -> float:
        c, s = math.cos(self.alpha), math.sin(self.alpha)
        return math.sqrt(self.lambda1 * c * c + self.lambda2 * s * s)

    @property
    def sigma2(self) -> float:
        c, s = math.cos(self.alpha), math.sin(self.alpha)
        return math.sqrt(self.lambda1 * s * s + self.lambda2 * c * c)

    @property
    def means(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2])

    @property
    def covariance(self) -> np.ndarray:
        r = rotation_2d(self.alpha)
        return r @ np.diag([self.lambda1, self.lambda2]) @ r.T

    def to_general(self) -> "GaussianGeneralParams":
        return GaussianGeneralParams(
            means=[self.mu1, self.mu2],
            eig_sqrt=[self.a, self.b],
            rotation=rotation_2d(self.alpha),
        )

    def to_dict(self) -> dict:
        return {
            "family": "gaussian-2d",
            "mu1": self.mu1,
            "mu2": self.mu2,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "alpha": self.alpha,
        }


def rotation_2d(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class GaussianGeneralParams:
    """k-dimensional Gaussian as means, sqrt-eigenvalues and an orthonormal eigenbasis.

    Column ``i`` of ``rotation`` is the eigenvector paired with ``eig_sqrt[i]``.
    """

    means: np.ndarray
    eig_sqrt: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        _set(self, "means", _frozen(self.means, "means"))
        _set(self, "eig_sqrt", _frozen(self.eig_sqrt, "eig_sqrt"))
        _set(self, "rotation", _frozen(self.rotation, "rotation", ndim=2))
        k = self.means.size
        if k < 1 or self.eig_sqrt.shape != (k,) or self.rotation.shape != (k, k):
            raise ModelError("means, eig_sqrt and rotation must agree on dimension k >= 1")
        if np.any(self.eig_sqrt <= 0):
            raise ModelError("eig_sqrt must be positive")
        if not np.allclose(self.rotation.T @ self.rotation, np.eye(k), rtol=0.0, atol=1e-9):
            raise ModelError("rotation must be orthonormal within 1e-9")

    @property
    def k(self) -> int:
        return int(self.means.size)

    @property
    def covariance(self) -> np.ndarray:
        return (self.rotation * self.eig_sqrt**2) @ self.rotation.T

    @property
    def stds(self) -> np.ndarray:
        return np.sqrt(np.einsum("ji,i->j", self.rotation**2, self.eig_sqrt**2))

    def __eq__(self, other):
        if not isinstance(other, GaussianGeneralParams):
            return NotImplemented
        return (
            np.array_equal(self.means, other.means)
            and np.array_equal(self.eig_sqrt, other.eig_sqrt)
            and np.array_equal(self.rotation, other.rotation)
        )

    def to_dict(self) -> dict:
        return {
            "family": "gaussian-general",
            "means": self.means.tolist(),
            "eig_sqrt": self.eig_sqrt.tolist(),
            "rotation": self.rotation.tolist(),
        }


class SecretTarget(NamedTuple):
    kind: str
    index: int

    @classmethod
    def parse(cls, text: str) -> "SecretTarget":
        """Parse ``"mean:0"`` / ``"std:2"``."""
        kind, _, idx = text.strip().partition(":")
        kind = kind.strip().lower()
        if kind not in _KINDS or not idx.strip().lstrip("-").isdigit():
            raise ModelError(f"cannot parse secret target {text!r}; expected e.g. 'mean:0'")
        return cls(kind, int(idx))

    def __str__(self):
        return f"{self.kind}:{self.index}"


@dataclass(frozen=True, eq=False)
class SecretSpec:
    """Which statistics are secret and the tolerance range for each."""

    targets: tuple
    tolerances: np.ndarray

    def __post_init__(self):
        targets = tuple(
            t if isinstance(t, SecretTarget) else
            SecretTarget.parse(t) if isinstance(t, str) else SecretTarget(str(t[0]).lower(), int(t[1]))
            for t in self.targets
        )
        _set(self, "targets", targets)
        _set(self, "tolerances", _frozen(self.tolerances, "tolerances"))
        if len(targets) < 1:
            raise ModelError("at least one secret is required")
        if self.tolerances.shape != (len(targets),):
            raise ModelError("one tolerance per secret is required")
        if np.any(self.tolerances <= 0):
            raise ModelError("tolerances must be positive")
        seen = set()
        for t in targets:
            if t.kind not in _KINDS:
                raise TargetError(t, f"unknown parameter kind (expected one of {_KINDS})")
            if t.index < 0:
                raise TargetError(t, "negative dimension index")
            if t in seen:
                raise TargetError(t, "duplicate target")
            seen.add(t)

    @property
    def d(self) -> int:
        return len(self.targets)

    @property
    def has_std(self) -> bool:
        return any(t.kind == STD for t in self.targets)

    def check_dimension(self, k: int) -> None:
        for t in self.targets:
            if t.index >= k:
                raise TargetError(t, f"index out of range for k={k}")

    def permuted(self, order: Sequence[int]) -> "SecretSpec":
        return SecretSpec([self.targets[i] for i in order], self.tolerances[list(order)])

    def __eq__(self, other):
        if not isinstance(other, SecretSpec):
            return NotImplemented
        return self.targets == other.targets and np.array_equal(self.tolerances, other.tolerances)

    def to_dict(self) -> dict:
        return {"targets": [str(t) for t in self.targets], "tolerances": self.tolerances.tolist()}


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint groups of secret indices."""

    groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        _set(self, "groups", groups)
        if not groups:
            raise ModelError("partition needs at least one group")
        seen: set[int] = set()
        for g in groups:
            if not g:
                raise ModelError("groups must be non-empty")
            for i in g:
                if i < 0:
                    raise ModelError("group indices must be non-negative")
                if i in seen:
                    raise ModelError(f"secret {i} appears in more than one group")
                seen.add(i)

    @property
    def beta(self) -> int:
        return len(self.groups)

    def covers(self, d: int) -> bool:
        return sorted(i for g in self.groups for i in g) == list(range(d))

    def check_within(self, d: int) -> None:
        for g in self.groups:
            for i in g:
                if i >= d:
                    raise ModelError(f"group index {i} out of range for d={d}")

    def group_ids(self, d: int) -> np.ndarray:
        """Group number per secret; -1 for secrets outside every group."""
        ids = np.full(d, -1, dtype=np.int64)
        for b, g in enumerate(self.groups):
            ids[list(g)] = b
        return ids

    def permuted(self, order: Sequence[int]) -> "GroupPartition":
        inverse = {old: new for new, old in enumerate(order)}
        return GroupPartition([[inverse[i] for i in g] for g in self.groups])

    @classmethod
    def singletons(cls, d: int) -> "GroupPartition":
        return cls([[i] for i in range(d)])

    @classmethod
    def whole(cls, d: int) -> "GroupPartition":
        return cls([list(range(d))])


@dataclass(frozen=True)
class LpSpec:
    """Norm order ``p`` (``math.inf`` allowed) and tolerance ``eps_p``."""

    p: float
    eps_p: float

    def __post_init__(self):
        _set(self, "p", float(self.p))
        _set(self, "eps_p", float(self.eps_p))
        if not self.p > 0:
            raise ModelError("p must be positive")
        if not (self.eps_p > 0 and math.isfinite(self.eps_p)):
            raise ModelError("eps_p must be positive and finite")

    def dim_root(self, d: int) -> float:
        """``d ** (1/p)``; equals 1 for the infinity norm."""
        return 1.0 if math.isinf(self.p) else d ** (1.0 / self.p)

    def norm(self, x: np.ndarray, axis=-1) -> np.ndarray:
        return np.linalg.norm(x, ord=self.p, axis=axis)

    @classmethod
    def matching(cls, p: float, tolerances: Iterable[float]) -> "LpSpec":
        """LpSpec with ``eps_p = (sum eps_i^p)^(1/p)``."""
        eps = np.asarray(list(tolerances), dtype=float)
        return cls(p, float(np.linalg.norm(eps, ord=float(p))))


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """Independent uniform prior on each secret: ``g_i ~ U[lo_i, hi_i]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        _set(self, "lo", _frozen(self.lo, "lo"))
        _set(self, "hi", _frozen(self.hi, "hi"))
        if self.lo.shape != self.hi.shape or self.lo.size < 1:
            raise ModelError("lo and hi must have equal, non-zero length")
        if np.any(self.hi <= self.lo):
            raise ModelError("prior intervals need hi > lo")

    @property
    def d(self) -> int:
        return int(self.lo.size)

    def check_spec(self, spec: SecretSpec) -> None:
        if self.d != spec.d:
            raise ModelError(f"prior covers {self.d} secrets but spec has {spec.d}")
        for i, t in enumerate(spec.targets):
            if t.kind == STD and self.lo[i] <= 0:
                raise ModelError(f"prior for std secret {t} must have lo > 0")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.random((n, self.d))

    @classmethod
    def bin_aligned(cls, cfg: "MechanismConfig", n_bins: int | Sequence[int] = 1) -> "PriorSpec":
        """Prior spanning whole quantization bins starting at each anchor."""
        n = np.broadcast_to(np.asarray(n_bins, dtype=float), cfg.lengths.shape)
        return cls(cfg.anchors, cfg.anchors + n * cfg.lengths)


@dataclass(frozen=True, eq=False)
class Dataset:
    """``m x t`` sample matrix with column labels."""

    samples: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        samples = _frozen(arr, "samples", ndim=2)
        _set(self, "samples", samples)
        m, t = samples.shape
        if m < 2 or t < 1:
            raise ModelError(f"dataset needs m >= 2 rows and t >= 1 columns, got {samples.shape}")
        labels = tuple(str(x) for x in self.labels) or tuple(f"x{j}" for j in range(t))
        if len(labels) != t:
            raise ModelError(f"{len(labels)} labels for {t} columns")
        _set(self, "labels", labels)

    @property
    def m(self) -> int:
        return int(self.samples.shape[0])

    @property
    def t(self) -> int:
        return int(self.samples.shape[1])

    def column_index(self, key: int | str) -> int:
        if isinstance(key, str):
            try:
                return self.labels.index(key)
            except ValueError:
                raise ModelError(f"no column labelled {key!r}") from None
        if not 0 <= key < self.t:
            raise ModelError(f"column {key} out of range for t={self.t}")
        return int(key)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.samples, other.samples)

    @classmethod
    def from_csv(cls, path, header: bool = True, delimiter: str = ",") -> "Dataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh, delimiter=delimiter))
        rows = [r for r in rows if r and any(c.strip() for c in r)]
        labels: list[str] = []
        if header:
            labels, rows = [c.strip() for c in rows[0]], rows[1:]
        try:
            data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
        except ValueError as exc:
            raise ModelError(f"{path}: non-numeric entry ({exc})") from None
        if data.ndim != 2:
            raise ModelError(f"{path}: ragged rows")
        return cls(data, labels)

    def to_csv(self, path, header: bool = True, delimiter: str = ",") -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            if header:
                writer.writerow(self.labels)
            for row in self.samples:
                writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True, eq=False)
class MechanismConfig:
    """Quantization settings plus optional baseline parameters.

    ``lengths``/``anchors`` are per secret (in spec order). The midpoint mode
    quantizes the sqrt-eigenvalues when any SD is secret; their interval
    lengths and anchors live in ``eig_lengths``/``eig_anchors`` (one per
    dimension).
    """

    lengths: np.ndarray
    anchors: np.ndarray
    mode: str = RANDOM_OFFSET
    eig_lengths: np.ndarray | None = None
    eig_anchors: np.ndarray | None = None
    noise_sd: float | None = None
    noise_scale: float | None = None
    bin_width: float | None = None

    def __post_init__(self):
        _set(self, "lengths", _frozen(self.lengths, "lengths"))
        _set(self, "anchors", _frozen(self.anchors, "anchors"))
        if self.lengths.shape != self.anchors.shape:
            raise ModelError("lengths and anchors must have equal length")
        if np.any(self.lengths <= 0):
            raise ModelError("interval lengths must be positive")
        if self.mode not in (RANDOM_OFFSET, MIDPOINT):
            raise ModelError(f"mode must be {RANDOM_OFFSET!r} or {MIDPOINT!r}, got {self.mode!r}")
        if (self.eig_lengths is None) != (self.eig_anchors is None):
            raise ModelError("eig_lengths and eig_anchors go together")
        if self.eig_lengths is not None:
            _set(self, "eig_lengths", _frozen(self.eig_lengths, "eig_lengths"))
            _set(self, "eig_anchors", _frozen(self.eig_anchors, "eig_anchors"))
            if self.eig_lengths.shape != self.eig_anchors.shape:
                raise ModelError("eig_lengths and eig_anchors must have equal length")
            if np.any(self.eig_lengths <= 0):
                raise ModelError("eig_lengths must be positive")
        for name in ("noise_sd", "noise_scale", "bin_width"):
            value = getattr(self, name)
            if value is not None and not (float(value) >= 0 and math.isfinite(float(value))):
                raise ModelError(f"{name} must be a non-negative finite number")

    @property
    def d(self) -> int:
        return int(self.lengths.size)

    def check_spec(self, spec: SecretSpec) -> None:
        if self.d != spec.d:
            raise ModelError(f"config has {self.d} interval lengths but spec has {spec.d} secrets")

    def check_analytic(self, spec: SecretSpec) -> None:
        """Analytic privacy formulas need ``2 eps_i <= s_i``."""
        self.check_spec(spec)
        bad = np.flatnonzero(2 * spec.tolerances > self.lengths * (1 + 1e-12))
        if bad.size:
            i = int(bad[0])
            raise ModelError(
                f"secret {spec.targets[i]}: 2*eps={2 * spec.tolerances[i]:g} exceeds "
                f"interval length {self.lengths[i]:g}"
            )

    def to_dict(self) -> dict:
        out = {"mode": self.mode, "lengths": self.lengths.tolist(), "anchors": self.anchors.tolist()}
        if self.eig_lengths is not None:
            out["eig_lengths"] = self.eig_lengths.tolist()
            out["eig_anchors"] = self.eig_anchors.tolist()
        for name in ("noise_sd", "noise_scale", "bin_width"):
            if getattr(self, name) is not None:
                out[name] = float(getattr(self, name))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MechanismConfig":
        known = {"lengths", "anchors", "mode", "eig_lengths", "eig_anchors",
                 "noise_sd", "noise_scale", "bin_width"}
        unknown = set(data) - known
        if unknown:
            raise ModelError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def secret_values(params, spec: SecretSpec) -> np.ndarray:
    """Evaluate each secret statistic on ``params``, in spec order."""
    if isinstance(params, GaussianDiagParams):
        means, stds = params.means, params.stds
    elif isinstance(params, Gaussian2DParams):
        means, stds = params.means, np.array([params.sigma1, params.sigma2])
    elif isinstance(params, GaussianGeneralParams):
        means, stds = params.means, params.stds
    else:
        raise ModelError(f"unsupported parameter type {type(params).__name__}")
    spec.check_dimension(means.size)
    return np.array([means[t.index] if t.kind == MEAN else stds[t.index] for t in spec.targets])


@dataclass(frozen=True, eq=False)
class ParamEstimate:
    """Per-column empirical mean and population SD.

    ``degenerate`` flags zero-variance columns; :meth:`to_params` refuses them.
    """

    means: np.ndarray
    stds: np.ndarray
    degenerate: np.ndarray

    def to_params(self) -> GaussianDiagParams:
        if np.any(self.degenerate):
            cols = np.flatnonzero(self.degenerate).tolist()
            raise ModelError(f"zero-variance columns {cols} cannot form a Gaussian")
        return GaussianDiagParams(self.means, self.stds)


def estimate_params(data: Dataset, family: str = "diag-gaussian") -> ParamEstimate:
    if family != "diag-gaussian":
        raise ModelError(f"unsupported family {family!r}")
    x = data.samples
    means = x.mean(axis=0)
    stds = np.sqrt(((x - means) ** 2).mean(axis=0))
    return ParamEstimate(means, stds, stds == 0)


def dataset_secret_values(data: Dataset, spec: SecretSpec) -> np.ndarray:
    """Empirical secrets (means / population SDs of the referenced columns)."""
    spec.check_dimension(data.t)
    cols = [t.index for t in spec.targets]
    x = data.samples[:, cols]
    mu = x.mean(axis=0)
    sd = np.sqrt(((x - mu) ** 2).mean(axis=0))
    kinds = np.array([t.kind == MEAN for t in spec.targets])
    return np.where(kinds, mu, sd)


def load_json_or_path(value):
    """Accept a dict, a JSON string, or a path to a JSON file."""
    import json

    if isinstance(value, dict):
        return value
    text = str(value)
    if Path(text).is_file():
        text = Path(text).read_text()
    return json.loads(text)


def params_from_dict(data: dict):
    """Inverse of the ``to_dict`` methods of the three parameter families."""
    data = dict(data)
    family = data.pop("family", "diag-gaussian")
    if family == "diag-gaussian":
        return GaussianDiagParams(**data)
    if family == "gaussian-2d":
        return Gaussian2DParams(**data)
    if family == "gaussian-general":
        return GaussianGeneralParams(**data)
    raise ModelError(f"unknown parameter family {family!r}")


def spec_from_dict(data: dict) -> SecretSpec:
    unknown = set(data) - {"targets", "tolerances"}
    if unknown:
        raise ModelError(f"unknown secret-spec keys: {sorted(unknown)}")
    return SecretSpec(data["targets"], data["tolerances"])
