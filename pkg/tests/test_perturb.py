import numpy as np
import pytest
from hypothesis import given, strategies as st

from regfred import families
from regfred.fredholm import DELTA_HIGH, fredholm_detect, stability_radius
from regfred.gapmetric import d_metric
from regfred.matalg import op_norm
from regfred.perturb import (
    PerturbationReport,
    bounded_identity_residual,
    bounded_stability_experiment,
    compact_stability_experiment,
    gap_ball_family,
    gap_open_experiment,
    relative_bound,
    relbound_budget,
    relbound_stability_experiment,
    t_compactness_score,
    unbounded_identity_residual,
)
from regfred.suites import corner_perturbation

from conftest import hermitian

LEVELS = (32, 64, 128, 256)
SMALL = (8, 16, 32, 64)


def brute_force_2x2(t, s, samples=200001):
    """sup over real unit vectors of ||s x|| / (||(t+s) x|| + 1) for diagonal t, s."""
    th = np.linspace(0.0, np.pi, samples)
    x = np.vstack([np.cos(th), np.sin(th)])
    return float(np.max(np.linalg.norm(s @ x, axis=0) / (np.linalg.norm((t + s) @ x, axis=0) + 1.0)))


def test_identity_residual_examples():
    assert bounded_identity_residual(np.zeros((2, 2)), np.zeros((2, 2))) == pytest.approx(0.0, abs=1e-15)
    assert bounded_identity_residual(np.zeros((1, 1)), np.eye(1)) <= 1e-15
    assert unbounded_identity_residual(np.diag([1.0, 2.0]), np.diag([5.0, -3.0])) <= 1e-14
    with pytest.raises(ValueError):
        bounded_identity_residual(np.eye(2), np.array([[0, 1], [0, 0]]))


@given(st.integers(2, 32), st.integers(0, 2**32 - 1), st.sampled_from([1e-2, 1.0, 1e3]))
def test_identity_residuals_property(n, seed, scale):
    r = np.random.default_rng(seed)
    t, d = hermitian(r, n, scale), hermitian(r, n, 1.0)
    assert bounded_identity_residual(t, d) <= 1e-10
    assert unbounded_identity_residual(t, hermitian(r, n, scale)) <= 1e-10


def test_relative_bound_examples():
    assert relative_bound(np.eye(3), np.zeros((3, 3))) == 0.0
    assert relative_bound(np.zeros((1, 1)), np.eye(1)) == pytest.approx(0.5, abs=1e-12)
    t = np.diag(np.arange(1.0, 11.0))
    assert relative_bound(t, 0.5 * t) == pytest.approx(5.0 / 16.0, abs=1e-9)


def test_relative_bound_two_dimensional_oracle(rng):
    for _ in range(20):
        t = np.diag(rng.uniform(-10, 10, 2))
        s = np.diag(rng.uniform(-3, 3, 2))
        oracle = brute_force_2x2(t, s)
        assert relative_bound(t, s) == pytest.approx(oracle, rel=1e-6)


def test_relative_bound_beats_random_sampling(rng):
    t, s = hermitian(rng, 6, 5.0), hermitian(rng, 6, 1.0)
    x = rng.standard_normal((6, 20000)) + 1j * rng.standard_normal((6, 20000))
    x /= np.linalg.norm(x, axis=0)
    sampled = np.max(np.linalg.norm(s @ x, axis=0) / (np.linalg.norm((t + s) @ x, axis=0) + 1))
    assert relative_bound(t, s) >= sampled - 1e-12


def test_relative_bound_is_deterministic(rng):
    t, s = hermitian(rng, 12, 3.0), hermitian(rng, 12, 1.0)
    assert relative_bound(t, s, seed=3) == relative_bound(t, s, seed=3)


def test_report_rejects_unknown_tag():
    v = fredholm_detect(families.diagonal("k", SMALL))
    with pytest.raises(ValueError):
        PerturbationReport("nope", v, v, 1.0, 0.0, True)


def test_bounded_stability_within_budget():
    fam = families.diagonal("k", LEVELS)
    _, eps_b = stability_radius(fam)
    rep = bounded_stability_experiment(fam, lambda n: hermitian(np.random.default_rng(n), n, 0.9 * eps_b))
    assert rep.passed and rep.theorem == "bounded"
    assert rep.budget == pytest.approx(eps_b) and rep.measured <= eps_b


def test_bounded_stability_over_budget_is_not_asserted():
    fam = families.diagonal("k", SMALL)
    _, eps_b = stability_radius(fam)
    rep = bounded_stability_experiment(fam, lambda n: 3 * eps_b * np.eye(n))
    assert not rep.passed and not rep.details["asserted"]


def test_bounded_stability_non_selfadjoint_lift():
    fam = families.shift(SMALL)
    _, eps_b = stability_radius(families.doubled(fam))
    rep = bounded_stability_experiment(fam, lambda n: 0.5 * eps_b * families.phase_unitary(n))
    assert rep.details["lifted"] and rep.details["doubling_norm_gap"] <= 1e-12
    assert rep.passed and rep.perturbed_verdict.index == -1


def test_compact_stability_shift_rank_three():
    fam = families.shift(LEVELS)
    rep = compact_stability_experiment(fam, corner_perturbation)
    assert rep.passed and rep.measured == pytest.approx(100.0)
    assert rep.base_verdict.index == rep.perturbed_verdict.index == -1


def test_compact_stability_rejects_non_compact():
    with pytest.raises(ValueError, match="compact"):
        compact_stability_experiment(families.diagonal("k", SMALL), lambda n: np.diag(np.arange(1.0, n + 1)))


def test_t_compactness_classification():
    fam = families.diagonal("k", LEVELS)
    ident = t_compactness_score(fam, np.eye)
    assert ident.compact and ident.identity_residual <= 1e-10
    # s(t + i)^-1 for s = I has singular values 1/sqrt(1 + k^2)
    k = np.arange(1, 257)
    np.testing.assert_allclose(ident.per_level_singulars[256], np.sort(1 / np.sqrt(1 + k * k)), atol=1e-13)
    assert not t_compactness_score(fam, lambda n: fam.at(n).matrix).compact


def test_relbound_small_multiple_of_identity():
    fam = families.diagonal("k", LEVELS)
    eps_c, _ = stability_radius(fam)
    budget = relbound_budget(eps_c)
    rep = relbound_stability_experiment(fam, lambda n: 0.5 * budget * np.eye(n))
    assert rep.passed and rep.measured <= rep.budget == pytest.approx(budget)
    assert rep.details["chain_ok"]


def test_relbound_sharpness_failure():
    fam = families.diagonal("k", SMALL)
    rep = relbound_stability_experiment(fam, lambda n: -fam.at(n).matrix)
    assert not rep.passed and rep.measured > rep.budget
    assert not rep.perturbed_verdict.is_fredholm


def test_relbound_budget_caps_at_quarter():
    assert relbound_budget(10.0) == 0.25
    assert relbound_budget(0.5) == pytest.approx(0.1)


def test_gap_ball_family_inside_radius():
    fam = families.diagonal("k", SMALL)
    pert = gap_ball_family(fam, 0.05, seed=1)
    for n in SMALL:
        assert d_metric(fam.at(n), pert.at(n)) <= 0.05
        assert pert.at(n).selfadjoint


def test_gap_open_experiment_diag_k():
    fam = families.diagonal("k", SMALL)
    eps_c, _ = stability_radius(fam)
    for seed in range(3):
        pert = gap_ball_family(fam, eps_c / 4.0, seed)
        rep = gap_open_experiment(fam, pert)
        assert rep.passed and rep.details["cayley_within_radius"]


def test_gap_open_outside_radius_loses_fredholm():
    fam = families.diagonal("k", LEVELS)
    far = families.diagonal("inv_k", LEVELS)
    rep = gap_open_experiment(fam, far)
    assert rep.measured > rep.budget and not rep.passed


def test_delta_high_constant():
    assert DELTA_HIGH == 1e-2
    assert op_norm(corner_perturbation(5)) == 100.0
