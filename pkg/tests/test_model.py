import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sspriv.model import (
    Dataset,
    Gaussian2DParams,
    GaussianDiagParams,
    GaussianGeneralParams,
    GroupPartition,
    LpSpec,
    MechanismConfig,
    ModelError,
    PriorSpec,
    SecretSpec,
    SecretTarget,
    TargetError,
    estimate_params,
    params_from_dict,
    rotation_2d,
    secret_values,
)


def means_spec(n, eps=None):
    return SecretSpec([f"mean:{i}" for i in range(n)], eps or [1.0] * n)


def test_secret_values_three_means():
    p = GaussianDiagParams([15, 68, 54], [1, 1, 1])
    assert secret_values(p, means_spec(3)).tolist() == [15, 68, 54]


def test_secret_values_isotropic_2d_sigma_is_one():
    p = Gaussian2DParams(0, 0, 1, 1, 0.7)
    assert secret_values(p, SecretSpec(["std:0", "std:1"], [1, 1])) == pytest.approx([1.0, 1.0], abs=1e-15)


def test_secret_values_std():
    p = GaussianDiagParams([0], [2])
    assert secret_values(p, SecretSpec(["std:0"], [1])).tolist() == [2.0]


def test_secret_values_out_of_range_names_target():
    p = GaussianDiagParams([0, 1], [1, 1])
    with pytest.raises(TargetError, match="mean:5"):
        secret_values(p, SecretSpec(["mean:5"], [1]))


def test_sigma_formulas_match_covariance_diagonal():
    p = Gaussian2DParams(1, 2, 3.0, 0.5, 0.9)
    cov = rotation_2d(0.9) @ np.diag([3.0, 0.5]) @ rotation_2d(0.9).T
    assert p.sigma1 == pytest.approx(math.sqrt(cov[0, 0]), rel=1e-14)
    assert p.sigma2 == pytest.approx(math.sqrt(cov[1, 1]), rel=1e-14)
    assert p.to_general().stds == pytest.approx([p.sigma1, p.sigma2], rel=1e-14)


def test_estimate_params_examples():
    e = estimate_params(Dataset(np.array([1.0, 2.0, 3.0])))
    assert e.means[0] == 2.0
    assert e.stds[0] == pytest.approx(math.sqrt(2 / 3), rel=1e-15)

    e = estimate_params(Dataset(np.array([5.0, 5.0, 5.0])))
    assert e.stds[0] == 0 and e.degenerate[0]
    with pytest.raises(ModelError):
        e.to_params()

    e = estimate_params(Dataset(np.array([[0.0, 10.0], [2.0, 10.0]])))
    assert e.means.tolist() == [1.0, 10.0]
    assert e.stds.tolist() == [1.0, 0.0]
    assert e.degenerate.tolist() == [False, True]


@settings(max_examples=60, deadline=None)
@given(
    c=st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3),
    b=st.floats(-100, 100),
    seed=st.integers(0, 2**16),
)
def test_estimate_params_affine_equivariance(c, b, seed):
    x = np.random.default_rng(seed).normal(size=(40, 2))
    e0 = estimate_params(Dataset(x))
    e1 = estimate_params(Dataset(c * x + b))
    np.testing.assert_allclose(e1.means, c * e0.means + b, rtol=1e-12, atol=1e-12 * (abs(b) + abs(c)))
    np.testing.assert_allclose(e1.stds, abs(c) * e0.stds, rtol=1e-12)


def test_secret_values_is_pure():
    p = GaussianDiagParams([1, 2], [3, 4])
    spec = SecretSpec(["std:1", "mean:0"], [1, 1])
    assert np.array_equal(secret_values(p, spec), secret_values(p, spec))


@pytest.mark.parametrize("bad", [
    dict(means=[0, 1], stds=[1, 0]),
    dict(means=[0, 1], stds=[1]),
    dict(means=[], stds=[]),
])
def test_diag_invariants(bad):
    with pytest.raises(ModelError):
        GaussianDiagParams(**bad)


def test_2d_invariants():
    with pytest.raises(ModelError):
        Gaussian2DParams(0, 0, 0, 1, 0)
    with pytest.raises(ModelError):
        Gaussian2DParams(0, 0, 1, 1, math.pi)


def test_general_rotation_must_be_orthonormal():
    with pytest.raises(ModelError):
        GaussianGeneralParams([0, 0], [1, 1], [[1, 0.1], [0, 1]])


def test_secret_spec_rules():
    with pytest.raises(ModelError):
        SecretSpec(["mean:0", "mean:0"], [1, 1])
    with pytest.raises(ModelError):
        SecretSpec(["mean:0"], [0])
    with pytest.raises(ModelError):
        SecretSpec([], [])
    with pytest.raises(ModelError):
        SecretTarget.parse("median:0")


def test_partition_rules():
    with pytest.raises(ModelError):
        GroupPartition([[0, 1], [1]])
    with pytest.raises(ModelError):
        GroupPartition([[]])
    p = GroupPartition([[0, 1], [2]])
    assert p.beta == 2 and p.covers(3) and not p.covers(4)
    assert p.group_ids(4).tolist() == [0, 0, 1, -1]


def test_lpspec_matching_and_dim_root():
    lp = LpSpec.matching(2, [3, 4])
    assert lp.eps_p == 5.0
    assert LpSpec(math.inf, 1).dim_root(7) == 1.0
    with pytest.raises(ModelError):
        LpSpec(2, 0)


def test_prior_std_needs_positive_lo():
    with pytest.raises(ModelError):
        PriorSpec([0.0], [1.0]).check_spec(SecretSpec(["std:0"], [0.1]))
    with pytest.raises(ModelError):
        PriorSpec([1.0], [1.0])


def test_dataset_rules_and_csv_roundtrip(tmp_path):
    with pytest.raises(ModelError):
        Dataset(np.array([[1.0, 2.0]]))
    with pytest.raises(ModelError):
        Dataset(np.array([1.0, np.nan]))
    d = Dataset(np.array([[1.5, -2.0], [0.1, 3.25]]), ["a", "b"])
    path = tmp_path / "d.csv"
    d.to_csv(path)
    assert Dataset.from_csv(path) == d
    path.write_text("1;2\n3;4\n")
    raw = Dataset.from_csv(path, header=False, delimiter=";")
    assert raw.samples.tolist() == [[1, 2], [3, 4]]
    assert raw.labels == ("x0", "x1")


def test_config_roundtrip_and_unknown_keys():
    cfg = MechanismConfig([6, 24], [0, 1], eig_lengths=[1, 1], eig_anchors=[0, 0], mode="midpoint")
    assert MechanismConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    with pytest.raises(ModelError):
        MechanismConfig.from_dict({"lengths": [1], "anchors": [0], "bogus": 1})
    with pytest.raises(ModelError):
        MechanismConfig([1], [0], mode="hybrid")


def test_config_analytic_precondition():
    spec = SecretSpec(["mean:0"], [1.0])
    MechanismConfig([2.0], [0]).check_analytic(spec)
    with pytest.raises(ModelError):
        MechanismConfig([1.9], [0]).check_analytic(spec)


def test_params_roundtrip():
    for p in (GaussianDiagParams([1, 2], [3, 4]), Gaussian2DParams(1, 2, 3, 4, 0.5),
              GaussianGeneralParams([1, 2], [3, 4], rotation_2d(0.3))):
        assert params_from_dict(p.to_dict()) == p


def test_values_are_immutable():
    p = GaussianDiagParams([1.0], [2.0])
    with pytest.raises(ValueError):
        p.means[0] = 5.0
