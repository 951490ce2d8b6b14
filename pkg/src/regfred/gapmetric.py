"""Graph projections, the gap metric and the resolvent-based metric d."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from regfred.matalg import adjoint, op_norm
from regfred.regop import as_regular, cayley, double, resolvent_r

SANDWICH_SLACK = 1e-10


@dataclass(frozen=True)
class GraphProjection:
    P: np.ndarray

    @property
    def n(self) -> int:
        return self.P.shape[0] // 2


def graph_projection(t) -> GraphProjection:
    """Orthogonal projection onto {(x, t x)} in block form.

    [[R_t, R_t t*], [t R_t, I - R_{t*}]], using R_t t* = t* R_{t*}.
    """
    a = as_regular(t).matrix
    n = a.shape[0]
    r = resolvent_r(a)
    r_adj = resolvent_r(adjoint(a))
    p = np.empty((2 * n, 2 * n), dtype=np.complex128)
    p[:n, :n] = r
    p[:n, n:] = r @ adjoint(a)
    p[n:, :n] = a @ r
    p[n:, n:] = np.eye(n) - r_adj
    return GraphProjection(0.5 * (p + adjoint(p)))


def _pair(t, s):
    t, s = as_regular(t), as_regular(s)
    if t.n != s.n:
        raise ValueError(f"dimension mismatch: {t.n} vs {s.n}")
    return t, s


def gap(t, s) -> float:
    t, s = _pair(t, s)
    return op_norm(graph_projection(t).P - graph_projection(s).P, hermitian=True)


def d_metric(t, s) -> float:
    """sup{||R_t - R_s||, ||R_t* - R_s*||, ||t R_t - s R_s||}."""
    t, s = _pair(t, s)
    if t.selfadjoint and s.selfadjoint:
        # R_{t*} = R_t, and R_t, t R_t are both real functions of t
        (ra, ta), (rb, tb) = _selfadjoint_resolvents(t), _selfadjoint_resolvents(s)
        return max(op_norm(ra - rb, hermitian=True), op_norm(ta - tb, hermitian=True))
    a, b = t.matrix, s.matrix
    ra, rb = resolvent_r(t), resolvent_r(s)
    return max(
        op_norm(ra - rb, hermitian=True),
        op_norm(resolvent_r(adjoint(a)) - resolvent_r(adjoint(b)), hermitian=True),
        op_norm(a @ ra - b @ rb),
    )


def _selfadjoint_resolvents(t):
    w, v = t.spectrum
    r = 1.0 / (1.0 + w * w)
    return (v * r) @ adjoint(v), (v * (w * r)) @ adjoint(v)


@dataclass(frozen=True)
class Sandwich:
    lower: float
    mid: float
    upper: float
    ok: bool

    def __iter__(self):
        return iter((self.lower, self.mid, self.upper, self.ok))


def cayley_sandwich(t, s) -> Sandwich:
    """Check ||C_t - C_s||/4 <= d(t, s) <= ||C_t - C_s||/2."""
    t, s = _pair(t, s)
    if not (t.selfadjoint and s.selfadjoint):
        raise ValueError("cayley_sandwich requires selfadjoint operators")
    dc = op_norm(cayley(t) - cayley(s))
    mid = d_metric(t, s)
    lower, upper = dc / 4.0, dc / 2.0
    ok = lower <= mid + SANDWICH_SLACK and mid <= upper + SANDWICH_SLACK
    return Sandwich(lower, mid, upper, ok)


def doubling_isometry_check(t, s) -> float:
    t, s = _pair(t, s)
    return abs(d_metric(t, s) - d_metric(double(t), double(s)))


def projection_oracle(t) -> np.ndarray:
    """Graph projection from an orthonormal basis of the stacked columns (I; t)."""
    a = as_regular(t).matrix
    q, _ = np.linalg.qr(np.vstack([np.eye(a.shape[0]), a]))
    return q @ adjoint(q)
