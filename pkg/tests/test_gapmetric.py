import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from regfred.gapmetric import (
    cayley_sandwich,
    d_metric,
    doubling_isometry_check,
    gap,
    graph_projection,
    projection_oracle,
)
from regfred.matalg import op_norm
from regfred.regop import resolvent_r

from conftest import complex_matrix, hermitian

log = logging.getLogger(__name__)


def normal_equation_oracle(a):
    """B (B* B)^-1 B* for B = (I; a), via least squares."""
    n = a.shape[0]
    b = np.vstack([np.eye(n), a])
    return b @ np.linalg.lstsq(b, np.eye(2 * n), rcond=None)[0]


def test_graph_projection_examples():
    np.testing.assert_allclose(graph_projection(np.zeros((1, 1))).P, [[1, 0], [0, 0]], atol=1e-15)
    np.testing.assert_allclose(graph_projection(np.eye(1)).P, 0.5 * np.ones((2, 2)), atol=1e-15)


def test_graph_projection_against_oracles(rng):
    for i in range(100):
        n = int(rng.integers(1, 24))
        a = hermitian(rng, n, 3.0) if i % 2 else complex_matrix(rng, n, float(rng.uniform(0.1, 10)))
        p = graph_projection(a).P
        assert op_norm(p - projection_oracle(a)) <= 1e-10
        assert op_norm(p - normal_equation_oracle(a)) <= 1e-9
        assert op_norm(p @ p - p) <= 1e-10 and op_norm(p - p.conj().T) <= 1e-10
        cols = np.vstack([np.eye(n), a])
        assert op_norm(p @ cols - cols) <= 1e-9 * op_norm(cols)


def test_upper_block_identity(rng):
    a = complex_matrix(rng, 8, 4.0)
    ah = a.conj().T
    assert op_norm(ah @ resolvent_r(ah) - resolvent_r(a) @ ah) <= 1e-12


def test_gap_examples():
    assert gap(np.eye(3), np.eye(3)) == 0.0
    assert gap(np.zeros((1, 1)), np.eye(1)) == pytest.approx(1 / np.sqrt(2), abs=1e-12)
    for c in (-5.0, 0.1, 2.0, 40.0):
        assert gap(np.zeros((1, 1)), np.diag([c])) == pytest.approx(abs(c) / np.sqrt(1 + c * c), abs=1e-12)


def test_gap_dimension_mismatch():
    with pytest.raises(ValueError):
        gap(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        d_metric(np.eye(2), np.eye(3))


def test_d_metric_examples():
    assert d_metric(np.eye(2), np.eye(2)) == 0.0
    assert d_metric(np.zeros((1, 1)), np.eye(1)) == pytest.approx(0.5, abs=1e-12)
    for a, b in [(0.3, 2.0), (-1.0, 4.0), (7.0, 7.5)]:
        expected = max(abs(1 / (1 + a * a) - 1 / (1 + b * b)), abs(a / (1 + a * a) - b / (1 + b * b)))
        assert d_metric(np.diag([a]), np.diag([b])) == pytest.approx(expected, abs=1e-14)


def test_d_metric_selfadjoint_shortcut_matches_general(rng):
    t, s = hermitian(rng, 6, 3.0), hermitian(rng, 6, 2.0)
    # perturb the flag only: the general route must agree
    from regfred.regop import RegularOperator
    general = d_metric(RegularOperator(t, False), RegularOperator(s, False))
    assert d_metric(t, s) == pytest.approx(general, abs=1e-12)


def test_metric_axioms_and_equivalence(rng):
    ops = [complex_matrix(rng, 5, float(rng.uniform(0.1, 5))) for _ in range(10)]
    ops += [hermitian(rng, 5, float(rng.uniform(0.1, 5))) for _ in range(5)]
    ratios = []
    for metric in (gap, d_metric):
        for a, b in itertools.combinations(ops, 2):
            assert metric(a, b) == metric(b, a)
            assert metric(a, a) == pytest.approx(0.0, abs=1e-14)
        for a, b, c in itertools.combinations(ops, 3):
            assert metric(a, c) <= metric(a, b) + metric(b, c) + 1e-10
    for a, b in itertools.combinations(ops + [ops[0].copy()], 2):
        g, d = gap(a, b), d_metric(a, b)
        assert 0.0 <= g <= 1.0 + 1e-12
        assert (g <= 1e-10) == (d <= 1e-10)
        if d > 0:
            ratios.append(g / d)
    log.info("gap/d ratios: min %.3f max %.3f", min(ratios), max(ratios))


def test_cayley_sandwich_examples():
    assert tuple(cayley_sandwich(np.eye(2), np.eye(2))) == (0.0, 0.0, 0.0, True)
    lo, mid, hi, ok = cayley_sandwich(np.zeros((1, 1)), np.eye(1))
    assert (lo, mid, hi) == pytest.approx((np.sqrt(2) / 4, 0.5, np.sqrt(2) / 2), abs=1e-12)
    assert ok
    with pytest.raises(ValueError):
        cayley_sandwich(np.array([[0, 1], [0, 0]]), np.eye(2))


@given(st.integers(1, 32), st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_cayley_sandwich_property(n, seed, scale):
    r = np.random.default_rng(seed)
    assert cayley_sandwich(hermitian(r, n, scale), hermitian(r, n, 1.0)).ok


def test_doubling_isometry_examples(rng):
    assert doubling_isometry_check(np.eye(2), np.eye(2)) == 0.0
    assert doubling_isometry_check(np.zeros((1, 1)), np.eye(1)) <= 1e-12
    for _ in range(50):
        n = int(rng.integers(1, 16))
        t, s = complex_matrix(rng, n, float(rng.uniform(0.1, 10))), complex_matrix(rng, n, 1.0)
        assert doubling_isometry_check(t, s) <= 1e-10
