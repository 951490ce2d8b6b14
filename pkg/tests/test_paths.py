import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from regfred import families
from regfred.fredholm import stability_radius
from regfred.paths import (
    DegenerateCrossingWarning,
    OperatorPath,
    gap_continuity_modulus,
    path_fredholm_check,
    spectral_flow,
)
from regfred.suites import shipped_paths, sign_path

SMALL = (8, 16, 32, 64)


def negative_count(a):
    return int(np.sum(np.linalg.eigvalsh(a) < 0))


def test_path_validation():
    fam = families.diagonal("k", SMALL)
    with pytest.raises(ValueError):
        OperatorPath(fam, [0.0], lambda lam, n: np.eye(n))
    p = OperatorPath(fam, [0.0, 1.0], lambda lam, n: np.eye(n, k=1))
    with pytest.raises(ValueError, match="not selfadjoint"):
        p.at(1.0, 8)


def test_refined_grid():
    p = OperatorPath(families.diagonal("k", SMALL), [0.0, 1.0, 2.0], lambda lam, n: lam * np.eye(n))
    np.testing.assert_allclose(p.refined(2).lambdas, [0, 0.5, 1, 1.5, 2])
    assert p.refined(4).lambdas.size == 9


def test_sign_path_flow():
    p = sign_path()
    assert spectral_flow(p, 2) == 2
    assert spectral_flow(p.reversed(), 2) == -2
    assert spectral_flow(p.refined(2), 2) == 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateCrossingWarning)
        assert spectral_flow(p.refined(4), 2) == 2


def test_interior_zero_is_flagged():
    p = OperatorPath(families.diagonal("k", SMALL), [-1.5, -1.0, 0.0], lambda lam, n: lam * np.eye(n))
    with pytest.warns(DegenerateCrossingWarning):
        assert spectral_flow(p, 8) == 1


def test_non_invertible_endpoint_rejected():
    p = OperatorPath(families.diagonal("k", SMALL), [-1.0, 0.0], lambda lam, n: lam * np.eye(n))
    with pytest.raises(ValueError, match="endpoints"):
        spectral_flow(p, 8)


def test_concatenation_adds():
    p = sign_path()
    back = OperatorPath(p.base, np.linspace(2.0, 0.5, 20), p.Agen, "back")
    assert spectral_flow(p.concat(back), 2) == spectral_flow(p, 2) + spectral_flow(back, 2) == 1


@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_flow_matches_negative_count_oracle(seed, n):
    # affine path with a diagonal slope: no tangencies, so flow = n_-(start) - n_-(end)
    r = np.random.default_rng(seed)
    v = r.uniform(-3, 3, n)
    slope = r.uniform(0.5, 2.0, n) * r.choice([-1, 1], n)
    base = families.diagonal(lambda k: v[k - 1], (n, n + 1, n + 2))
    lams = np.linspace(-1.0, 1.0, 101)
    path = OperatorPath(base, lams, lambda lam, m: np.diag(np.r_[lam * slope, np.zeros(m - n)]))
    start, end = path.at(lams[0], n).matrix, path.at(lams[-1], n).matrix
    if min(abs(np.linalg.eigvalsh(start)).min(), abs(np.linalg.eigvalsh(end)).min()) < 1e-6:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateCrossingWarning)
        assert spectral_flow(path, n) == negative_count(start) - negative_count(end)


def test_shipped_paths_continuity_and_fredholm():
    fam = families.diagonal("k", SMALL)
    _, eps_b = stability_radius(fam)
    paths = shipped_paths(fam, eps_b, seed=7)
    assert [p.label for p in paths] == ["direction", "scalar", "rank-one"]
    for p in paths:
        rep = gap_continuity_modulus(p)
        assert rep.ok and rep.d_ok and rep.pairs > 0
    for p in paths[:2]:
        check = path_fredholm_check(p, require_budget=True)
        assert check.ok and check.mode == "budget"
    check = path_fredholm_check(paths[2])
    assert check.ok and check.mode == "t_compact"


def test_continuity_constant_direct():
    # scalar shift of diag(0): ||C_a - C_b|| / |a - b| on a fine grid
    p = OperatorPath(families.diagonal("zero", (2, 3, 4)), np.linspace(-3, 3, 61), lambda lam, n: lam * np.eye(n))
    rep = gap_continuity_modulus(p)
    assert rep.ok and rep.max_ratio == pytest.approx(2.0, rel=1e-2)


def test_over_budget_path_names_lambda():
    fam = families.diagonal("k", SMALL)
    p = OperatorPath(fam, [0.0, 5.0], lambda lam, n: lam * np.eye(n))
    with pytest.raises(ValueError, match="A\\(5\\)"):
        path_fredholm_check(p, require_budget=True)
