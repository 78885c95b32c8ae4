import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    grid_family_bruteforce,
    group_exact,
    inter_exact,
    posterior_success_rate_by_integration,
    union_exact,
)
from sspriv import _backend
from sspriv.model import (
    Dataset,
    GroupPartition,
    ModelError,
    LpSpec,
    MechanismConfig,
    PriorSpec,
    SecretSpec,
)
from sspriv.privacy import (
    PrivacyError,
    analytic_privacy_alg1,
    empirical_support,
    grid_attackers,
    monte_carlo_privacy,
    multi_shot_privacy,
    surrogate_from_secrets,
    surrogate_privacy,
)

SPEC3 = SecretSpec(["mean:0", "mean:1", "mean:2"], [1, 4, 3])
CFG3 = MechanismConfig([6, 24, 18], [0, 0, 0])
GROUPS = GroupPartition([[0, 1], [2]])
RATIOS = [Fraction(1, 3)] * 3

# frozen from the exact-fraction oracles
UNION_19_27 = float(union_exact(RATIOS))
INTER_1_27 = float(inter_exact(RATIOS))
GROUP_11_27 = float(group_exact(RATIOS, [[0, 1], [2]]))


def test_frozen_oracle_values():
    assert union_exact(RATIOS) == Fraction(19, 27)
    assert inter_exact(RATIOS) == Fraction(1, 27)
    assert group_exact(RATIOS, [[0, 1], [2]]) == Fraction(11, 27)


def test_analytic_examples():
    assert analytic_privacy_alg1(SPEC3, CFG3, "union").value == pytest.approx(UNION_19_27, rel=1e-14)
    assert analytic_privacy_alg1(SPEC3, CFG3, "intersection").value == pytest.approx(INTER_1_27, rel=1e-14)
    assert analytic_privacy_alg1(SPEC3, CFG3, "group", GROUPS).value == pytest.approx(GROUP_11_27, rel=1e-14)
    one = SecretSpec(["mean:0"], [1])
    cfg = MechanismConfig([2], [0])
    assert analytic_privacy_alg1(one, cfg, "union").value == 1.0
    assert analytic_privacy_alg1(one, cfg, "inter").value == 1.0


def test_analytic_lp_is_flagged_upper_bound():
    rep = analytic_privacy_alg1(SPEC3, CFG3, "lp", lp=LpSpec(2, 2.0))
    r = 2 * 2.0 / (math.sqrt(3) * np.array([6, 24, 18]))
    assert rep.upper_bound and rep.value == pytest.approx(1 - np.prod(1 - r), rel=1e-14)


def test_analytic_errors():
    with pytest.raises(Exception, match="exceeds"):
        analytic_privacy_alg1(SPEC3, MechanismConfig([1, 24, 18], [0, 0, 0]), "union")
    with pytest.raises(PrivacyError, match="cover"):
        analytic_privacy_alg1(SPEC3, CFG3, "group", GroupPartition([[0, 1]]))
    with pytest.raises(PrivacyError):
        analytic_privacy_alg1(SPEC3, CFG3, "lp")


def test_surrogate_examples():
    g, gh, eps = [15, 68, 54], [15.5, 66, 54.9], [1, 4, 3]
    assert surrogate_from_secrets(g, gh, eps, "union") == pytest.approx(-0.3, abs=1e-12)
    assert surrogate_from_secrets(g, gh, eps, "inter") == pytest.approx(-0.5, abs=1e-12)
    assert surrogate_from_secrets(g, gh, eps, "group", GROUPS) == pytest.approx(-0.3, abs=1e-12)
    for metric in ("union", "inter"):
        assert surrogate_from_secrets(g, g, eps, metric) == 0.0
    assert surrogate_from_secrets(g, g, eps, "group", GROUPS) == 0.0
    assert surrogate_from_secrets(g, g, eps, "lp", lp=LpSpec(1, 8)) == 0.0
    assert surrogate_from_secrets(g, gh, eps, "lp", lp=LpSpec(1, 8)) == pytest.approx(-3.4 / 8)


def test_surrogate_on_datasets():
    x = Dataset(np.array([[0.0, 1.0], [2.0, 3.0]]))
    y = Dataset(np.array([[1.0, 1.0], [3.0, 3.0]]))
    spec = SecretSpec(["mean:0", "std:1"], [2.0, 1.0])
    assert surrogate_privacy(x, y, spec, "union").value == 0.0
    assert surrogate_privacy(x, y, spec, "inter").value == -0.5
    with pytest.raises(Exception):
        surrogate_privacy(x, y, SecretSpec(["mean:4"], [1.0]), "union")


@settings(max_examples=100, deadline=None)
@given(
    d=st.integers(1, 5),
    seed=st.integers(0, 10_000),
)
def test_surrogate_permutation_invariance_and_sign(d, seed):
    rng = np.random.default_rng(seed)
    g, gh, eps = rng.normal(size=d), rng.normal(size=d), rng.uniform(0.1, 3, d)
    order = rng.permutation(d)
    cut = int(rng.integers(1, d + 1))
    part = GroupPartition([list(range(cut))] + ([list(range(cut, d))] if cut < d else []))
    spec = SecretSpec([f"mean:{i}" for i in range(d)], eps)
    pspec = spec.permuted(order)
    ppart = part.permuted(order)
    for metric, kw in (("union", {}), ("inter", {}), ("group", {"partition": part}),
                       ("lp", {"lp": LpSpec(3, 2.0)})):
        a = surrogate_from_secrets(g, gh, eps, metric, **kw)
        kwp = {"partition": ppart} if metric == "group" else kw
        b = surrogate_from_secrets(g[order], gh[order], pspec.tolerances, metric, **kwp)
        assert a <= 0
        assert a == pytest.approx(b, rel=1e-12, abs=1e-15)
    inter = surrogate_from_secrets(g, gh, eps, "inter")
    grp = surrogate_from_secrets(g, gh, eps, "group", part)
    uni = surrogate_from_secrets(g, gh, eps, "union")
    assert inter <= grp <= uni


def test_grid_family_examples():
    one = SecretSpec(["mean:0"], [1.0])
    fam = grid_attackers(PriorSpec([0.0], [6.0]), one)
    assert fam.size == 3 and fam.midpoints(0).tolist() == [1.0, 3.0, 5.0]
    two = SecretSpec(["mean:0", "mean:1"], [1.0, 1.0])
    assert grid_attackers(PriorSpec([0, 0], [4, 4]), two).size == 4
    narrow = grid_attackers(PriorSpec([2.0], [3.5]), one)
    assert narrow.size == 1
    g = np.linspace(2.0, 3.5, 101)[:, None]
    assert narrow.success_counts(g, "union")[0] == 101
    with pytest.raises(ModelError, match="finite"):
        grid_attackers(PriorSpec([0.0], [np.inf]), one)


def test_grid_family_matches_bruteforce_enumeration():
    lo, hi, eps = [0.0, 1.0, -2.0], [6.0, 9.0, 3.0], [1.0, 2.0, 0.5]
    fam = grid_attackers(PriorSpec(lo, hi), SecretSpec(["mean:0", "mean:1", "std:0"], eps))
    brute = grid_family_bruteforce(lo, hi, eps)
    assert fam.size == len(brute)
    for flat, guess in enumerate(brute):
        np.testing.assert_allclose(fam.guess(fam.index(flat)), guess, rtol=0, atol=1e-12)


@pytest.mark.parametrize("metric", ["union", "inter", "group", "lp"])
def test_grid_counts_against_direct_evaluation(metric):
    rng = np.random.default_rng(7)
    lo, hi, eps = np.zeros(3), np.array([6.0, 4.0, 5.0]), np.array([1.0, 1.0, 1.5])
    spec = SecretSpec(["mean:0", "mean:1", "mean:2"], eps)
    fam = grid_attackers(PriorSpec(lo, hi), spec)
    g = rng.uniform(lo, hi, size=(500, 3))
    lp = LpSpec(2, 1.7)
    counts = fam.success_counts(g, metric, GROUPS, lp)
    for flat in range(fam.size):
        diff = np.abs(fam.guess(fam.index(flat)) - g)
        hit = diff <= eps
        if metric == "union":
            ok = hit.any(1)
        elif metric == "inter":
            ok = hit.all(1)
        elif metric == "group":
            ok = hit[:, :2].all(1) | hit[:, 2]
        else:
            ok = np.sqrt((diff**2).sum(1)) <= 1.7
        assert counts[flat] == ok.sum()


@pytest.mark.parametrize("metric,p", [("union", 2.0), ("inter", 2.0), ("group", 2.0),
                                      ("lp", 1.0), ("lp", 2.0), ("lp", 3.0), ("lp", math.inf)])
def test_grid_backends_agree(metric, p):
    rng = np.random.default_rng(11)
    g = rng.uniform(0, 6, size=(3000, 4))
    args = (g, np.zeros(4), np.array([1.0, 0.5, 2.0, 1.5]), np.array([3, 6, 2, 2], dtype=np.int64),
            {"union": 0, "inter": 1, "group": 2, "lp": 3}[metric],
            np.array([0, 0, 1, -1], dtype=np.int64), 2, p, 2.2)
    outs = [_backend.get(b).grid_success_counts(*args) for b in _backend.available()]
    for o in outs[1:]:
        np.testing.assert_array_equal(outs[0], o)


def test_posterior_bin_guess_rate_oracle():
    # the leftmost eps-window of an interval of length s catches a uniform secret w.p. 2 eps / s
    assert posterior_success_rate_by_integration(1.0, 6.0, 1.0) == pytest.approx(1 / 3, abs=1e-5)


def test_monte_carlo_matches_analytic_all_metrics():
    for d in (1, 2, 3):
        spec = SecretSpec([f"mean:{i}" for i in range(d)], [1, 4, 3][:d])
        cfg = MechanismConfig([6, 24, 18][:d], [0, 0, 0][:d])
        prior = PriorSpec.bin_aligned(cfg, 2)
        part = {1: GroupPartition([[0]]), 2: GroupPartition([[0], [1]]), 3: GROUPS}[d]
        lp = LpSpec.matching(2, spec.tolerances)
        for metric in ("union", "inter", "group", "lp"):
            rep = monte_carlo_privacy("alg1", cfg, prior, spec, metric, part, lp, n_trials=40_000, seed=d)
            ref = analytic_privacy_alg1(spec, cfg, metric, part, lp).value
            se = math.sqrt(max(ref * (1 - ref), 1e-12) / 40_000)
            if metric == "lp":
                assert rep.value <= ref + 3 * se
            else:
                assert abs(rep.value - ref) <= 3 * se + 1e-12


def test_monte_carlo_identity_limit():
    spec = SecretSpec(["mean:0"], [1.0])
    cfg = MechanismConfig([2e-6], [0.0])
    prior = PriorSpec([0.0], [100.0])
    assert monte_carlo_privacy("alg1", cfg, prior, spec, "union", n_trials=5000).value == 1.0


def test_monte_carlo_event_containment():
    prior = PriorSpec.bin_aligned(CFG3, 3)
    for attacker in ("posterior-bin", "grid"):
        vals = {}
        for metric in ("union", "inter", "group", "lp"):
            vals[metric] = monte_carlo_privacy("alg1", CFG3, prior, SPEC3, metric, GROUPS,
                                               LpSpec.matching(1, SPEC3.tolerances), attacker,
                                               n_trials=5000, seed=3).value
        assert vals["inter"] <= vals["lp"] <= vals["union"]
        assert vals["inter"] <= vals["group"] <= vals["union"]


def test_group_extremes_equal_union_and_inter_per_trial():
    prior = PriorSpec.bin_aligned(CFG3, 2)
    for attacker in ("posterior-bin", "grid"):
        kw = dict(attacker=attacker, n_trials=6000, seed=5)
        u = monte_carlo_privacy("alg1", CFG3, prior, SPEC3, "union", **kw).value
        i = monte_carlo_privacy("alg1", CFG3, prior, SPEC3, "inter", **kw).value
        gd = monte_carlo_privacy("alg1", CFG3, prior, SPEC3, "group", GroupPartition.singletons(3), **kw).value
        g1 = monte_carlo_privacy("alg1", CFG3, prior, SPEC3, "group", GroupPartition.whole(3), **kw).value
        assert gd == u and g1 == i


def test_monte_carlo_worker_invariance():
    prior = PriorSpec.bin_aligned(CFG3, 2)
    a = monte_carlo_privacy("alg1", CFG3, prior, SPEC3, "union", n_trials=30_000, seed=9, workers=1, block=4096)
    b = monte_carlo_privacy("alg1", CFG3, prior, SPEC3, "union", n_trials=30_000, seed=9, workers=4, block=4096)
    assert a.value == b.value


def test_monte_carlo_errors():
    prior = PriorSpec.bin_aligned(CFG3)
    mid = MechanismConfig([6, 24, 18], [0, 0, 0], mode="midpoint")
    with pytest.raises(PrivacyError, match="only optimal"):
        monte_carlo_privacy("alg2", mid, prior, SPEC3, "union")
    with pytest.raises(PrivacyError):
        monte_carlo_privacy("alg1", CFG3, prior, SPEC3, "union", n_trials=10)
    with pytest.raises(PrivacyError):
        monte_carlo_privacy("alg1", CFG3, prior, SPEC3, "union", attacker="oracle")
    # the grid family works for any simulated mechanism
    rep = monte_carlo_privacy("alg2", mid, prior, SPEC3, "union", attacker="grid", n_trials=2000)
    assert 0 <= rep.value <= 1 and rep.attacker == "grid"


def test_multi_shot():
    spec = SecretSpec(["mean:0"], [1.0])
    cfg = MechanismConfig([6.0], [0.0])
    prior = PriorSpec.bin_aligned(cfg, 5)
    kw = dict(n_trials=50_000, seed=4)
    single = monte_carlo_privacy("alg1", cfg, prior, spec, "union", **kw).value
    vals = [multi_shot_privacy("alg1", cfg, prior, spec, k, **kw).value for k in (1, 2, 3)]
    assert vals[0] == single
    assert vals[2] == 1.0
    assert vals[0] < vals[1] < vals[2]
    se = math.sqrt(2 / 3 * 1 / 3 / 50_000)
    # analytic coverage: min(1, 2 k eps / s)
    assert abs(vals[1] - 2 / 3) < 4 * se
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        v = multi_shot_privacy("alg1", cfg, prior, spec, 7, **kw)
    assert v.value == 1.0 and v.config["n_guesses"] == 3 and caught
    with pytest.raises(PrivacyError):
        multi_shot_privacy("alg1", CFG3, PriorSpec.bin_aligned(CFG3), SPEC3, 2)


def test_empirical_support_widens_by_eps():
    x = Dataset(np.array([[0.0, 1.0], [4.0, 5.0], [2.0, 3.0]]))
    sup = empirical_support(x, SecretSpec(["mean:0", "std:1"], [0.5, 1.0]))
    assert sup.lo[0] == -0.5 and sup.hi[0] == 4.5
    assert sup.lo[1] > 0 and sup.hi[1] == 3.0
