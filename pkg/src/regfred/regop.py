"""Transform calculus for regular operators at a fixed truncation level.

For a matrix t we form Q_t = (1 + t*t)^(-1/2), R_t = Q_t^2, the bounded
transform F_t = t Q_t and, for selfadjoint t, the Cayley transform
C_t = (t - i)(t + i)^(-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from regfred.matalg import (
    HERMITIAN_RTOL,
    adjoint,
    as_module_element,
    as_operator,
    herm_apply,
    is_hermitian,
    is_unitary,
    module_inner,
    op_norm,
)

# relative condition number above which I - u is treated as singular
CAYLEY_COND_LIMIT = 1e12


@dataclass(frozen=True)
class RegularOperator:
    """One truncation level of a regular operator.

    ``selfadjoint=None`` autodetects; an explicit ``True`` is validated and the
    stored matrix is symmetrized.
    """

    matrix: np.ndarray
    selfadjoint: bool | None = None
    label: str = ""

    def __post_init__(self):
        a = as_operator(self.matrix)
        herm = is_hermitian(a, HERMITIAN_RTOL)
        if self.selfadjoint and not herm:
            raise ValueError(f"{self.label or 'operator'} flagged selfadjoint but is not Hermitian")
        flag = herm if self.selfadjoint is None else bool(self.selfadjoint)
        if flag:
            a = 0.5 * (a + adjoint(a))
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "selfadjoint", flag)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and eigenvectors; selfadjoint operators only."""
        if not self.selfadjoint:
            raise ValueError("spectrum is only cached for selfadjoint operators")
        return np.linalg.eigh(self.matrix)

    @property
    def adj(self) -> "RegularOperator":
        return RegularOperator(adjoint(self.matrix), self.selfadjoint, self.label + "*")

    def __add__(self, other):
        other_m = other.matrix if isinstance(other, RegularOperator) else as_operator(other)
        return RegularOperator(self.matrix + other_m, None, self.label)


def as_regular(t, label: str = "") -> RegularOperator:
    if isinstance(t, RegularOperator):
        return t
    return RegularOperator(as_operator(t), None, label)


def _require_selfadjoint(t: RegularOperator, what: str) -> None:
    if not t.selfadjoint:
        raise ValueError(f"{what} requires a selfadjoint operator")


@dataclass(frozen=True)
class TransformBundle:
    Q: np.ndarray
    R: np.ndarray
    F: np.ndarray


def transforms(t) -> TransformBundle:
    t = as_regular(t)
    a = t.matrix
    if t.selfadjoint:
        # Q and F are functions of t itself
        w, v = t.spectrum
        q_vals = 1.0 / np.sqrt(1.0 + w * w)
        q = (v * q_vals) @ adjoint(v)
        return TransformBundle(Q=q, R=(v * q_vals**2) @ adjoint(v), F=(v * (w * q_vals)) @ adjoint(v))
    q = herm_apply(adjoint(a) @ a, lambda x: 1.0 / np.sqrt(1.0 + np.clip(x, 0.0, None)))
    return TransformBundle(Q=q, R=q @ q, F=a @ q)


def resolvent_r(t) -> np.ndarray:
    """R_t = (1 + t*t)^(-1)."""
    t = as_regular(t)
    a = t.matrix
    if t.selfadjoint:
        w, v = t.spectrum
        return (v / (1.0 + w * w)) @ adjoint(v)
    return herm_apply(adjoint(a) @ a, lambda x: 1.0 / (1.0 + np.clip(x, 0.0, None)))


def cayley(t) -> np.ndarray:
    t = as_regular(t)
    _require_selfadjoint(t, "cayley")
    eye = np.eye(t.n)
    # t - i and (t + i)^-1 commute, so C_t = (t + i)^-1 (t - i)
    return np.linalg.solve(t.matrix + 1j * eye, t.matrix - 1j * eye)


def inverse_cayley(u, label: str = "") -> RegularOperator:
    """Selfadjoint preimage t = i (I + u)(I - u)^-1 of a unitary u."""
    u = as_operator(u)
    if not is_unitary(u, 1e-8):
        raise ValueError("inverse_cayley requires a unitary matrix")
    eye = np.eye(u.shape[0])
    if np.linalg.cond(eye - u) > CAYLEY_COND_LIMIT:
        raise ValueError("Cayley preimage unbounded at this truncation")
    t = 1j * np.linalg.solve(eye - u, eye + u)
    return RegularOperator(0.5 * (t + adjoint(t)), True, label)


def resolvent(t, sign: int) -> np.ndarray:
    """(t - sign*i)^-1."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    t = as_regular(t)
    _require_selfadjoint(t, "resolvent")
    return np.linalg.inv(t.matrix - sign * 1j * np.eye(t.n))


def resolvent_from_transforms(t, sign: int, bundle: TransformBundle | None = None) -> np.ndarray:
    """t R_t + sign*i R_t, which equals (t - sign*i)^-1; written F_t Q_t + sign*i Q_t^2."""
    t = as_regular(t)
    b = bundle or transforms(t)
    return b.F @ b.Q + sign * 1j * b.R


def cayley_factorization_check(t) -> tuple[float, bool]:
    """Residual of I + C_t = 2 F_t (F_t - i Q_t) and unitarity of F_t - i Q_t."""
    t = as_regular(t)
    _require_selfadjoint(t, "cayley_factorization_check")
    b = transforms(t)
    w = b.F - 1j * b.Q
    lhs = np.eye(t.n) + cayley(t)
    return op_norm(lhs - 2.0 * b.F @ w), is_unitary(w, 1e-10)


def double(t) -> RegularOperator:
    """The selfadjoint doubling [[0, t*], [t, 0]] on E + E."""
    t = as_regular(t)
    n = t.n
    out = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    out[:n, n:] = adjoint(t.matrix)
    out[n:, :n] = t.matrix
    return RegularOperator(out, True, f"double({t.label})" if t.label else "double")


def graph_gram(t, x, y) -> np.ndarray:
    """Graph inner product <x, y> + <t x, t y>."""
    a = as_regular(t).matrix
    x = as_module_element(x)
    y = as_module_element(y)
    if x.shape[0] != a.shape[0] or y.shape[0] != a.shape[0]:
        raise ValueError("module elements do not match operator size")
    return module_inner(x, y) + module_inner(a @ x, a @ y)
