"""Paths t + A_lambda of selfadjoint Fredholm operators: gap continuity and spectral flow.

The spectral flow here is the integer-valued Hilbert-space count of
eigenvalues crossing zero, an extension beyond what the stability results
need.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from regfred.fredholm import DELTA_HIGH, DELTA_LOW, FredholmVerdict, TruncatedFamily, fredholm_detect, stability_radius
from regfred.gapmetric import d_metric
from regfred.matalg import as_operator, op_norm
from regfred.perturb import t_compactness_score
from regfred.regop import RegularOperator, cayley

DENOM_FLOOR = 1e-14
CAYLEY_CONSTANT = 4.0


class DegenerateCrossingWarning(UserWarning):
    pass


@dataclass
class OperatorPath:
    """lambda -> t + A_lambda over a sampled grid.

    ``Agen(lam, n)`` returns the selfadjoint perturbation at level n.
    """

    base: TruncatedFamily
    lambdas: np.ndarray
    Agen: Callable[[float, int], np.ndarray]
    label: str = ""

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        if self.lambdas.ndim != 1 or self.lambdas.size < 2:
            raise ValueError("a path needs at least 2 grid points")

    def A(self, lam: float, n: int) -> RegularOperator:
        a = RegularOperator(as_operator(self.Agen(lam, n)))
        if not a.selfadjoint:
            raise ValueError(f"{self.label}: A({lam:g}) at level {n} is not selfadjoint")
        return a

    def at(self, lam: float, n: int) -> RegularOperator:
        t = self.base.at(n)
        return RegularOperator(t.matrix + self.A(lam, n).matrix, True)

    def family(self, lam: float) -> TruncatedFamily:
        return self.base.derive(lambda n, t: t.matrix + self.A(lam, n).matrix, f"{self.label}@{lam:g}")

    def reversed(self) -> "OperatorPath":
        return OperatorPath(self.base, self.lambdas[::-1].copy(), self.Agen, f"rev({self.label})")

    def refined(self, factor: int = 2) -> "OperatorPath":
        """Insert ``factor - 1`` equally spaced points into every grid interval."""
        lams = self.lambdas
        pieces = [np.linspace(a, b, factor, endpoint=False) for a, b in zip(lams, lams[1:])]
        grid = np.concatenate(pieces + [lams[-1:]])
        return OperatorPath(self.base, grid, self.Agen, f"{self.label}x{factor}")

    def concat(self, other: "OperatorPath") -> "OperatorPath":
        """Join two paths over the same base, switching generators at the junction."""
        if other.base is not self.base:
            raise ValueError("paths must share a base family")
        if not np.isclose(self.lambdas[-1], other.lambdas[0]):
            raise ValueError("paths do not meet")
        # reparametrize onto one increasing grid: first piece on [0, 1], second on [1, 2]
        n1, n2 = self.lambdas.size, other.lambdas.size
        grid = np.concatenate([np.linspace(0.0, 1.0, n1), np.linspace(1.0, 2.0, n2)[1:]])
        first, second = self, other

        def agen(u, n):
            if u <= 1.0:
                return first.Agen(np.interp(u, np.linspace(0, 1, n1), first.lambdas), n)
            return second.Agen(np.interp(u, np.linspace(1, 2, n2), second.lambdas), n)

        return OperatorPath(self.base, grid, agen, f"{self.label}*{other.label}")


@dataclass(frozen=True)
class ContinuityReport:
    max_ratio: float
    ok: bool
    max_d_ratio: float
    d_ok: bool
    pairs: int

    def __iter__(self):
        return iter((self.max_ratio, self.ok))


def gap_continuity_modulus(path: OperatorPath) -> ContinuityReport:
    """max ||C_{t+A_l} - C_{t+A_m}|| / ||A_l - A_m|| over adjacent grid pairs and levels.

    Also tracks d(t+A_l, t+A_m) / ||A_l - A_m||, which the Cayley sandwich caps at 2.
    """
    max_ratio = max_d = 0.0
    pairs = 0
    for n in path.base.levels:
        t = path.base.at(n).matrix
        prev_a = path.A(path.lambdas[0], n).matrix
        prev_c = cayley(RegularOperator(t + prev_a, True))
        prev_op = RegularOperator(t + prev_a, True)
        for lam in path.lambdas[1:]:
            a = path.A(lam, n).matrix
            op = RegularOperator(t + a, True)
            c = cayley(op)
            da = op_norm(a - prev_a)
            if da >= DENOM_FLOOR:
                pairs += 1
                max_ratio = max(max_ratio, op_norm(c - prev_c) / da)
                max_d = max(max_d, d_metric(op, prev_op) / da)
            prev_a, prev_c, prev_op = a, c, op
    return ContinuityReport(max_ratio, max_ratio <= CAYLEY_CONSTANT + 1e-8, max_d, max_d <= 2.0 + 1e-8, pairs)


@dataclass
class PathCheck:
    verdicts: list[FredholmVerdict]
    mode: str
    ok: bool
    details: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.verdicts)

    def __len__(self):
        return len(self.verdicts)


def path_fredholm_check(path: OperatorPath, require_budget: bool = False, *,
                        delta_low: float = DELTA_LOW, delta_high: float = DELTA_HIGH) -> PathCheck:
    """Fredholm verdict at every grid point.

    With ``require_budget`` every ||A_lambda|| must fit inside eps_bounded of
    the base; otherwise, if every A_lambda is t-compact, no norm budget is
    needed. In either certified mode ``ok`` means every verdict is Fredholm.
    """
    base = fredholm_detect(path.base, delta_low, delta_high)
    if not base.is_fredholm:
        raise ValueError(f"path base {path.base.label!r} is not Fredholm")
    details = {}
    if require_budget:
        _, eps_b = stability_radius(path.base, delta_low, delta_high)
        details["budget"] = eps_b
        for lam in path.lambdas:
            worst = max(op_norm(path.A(lam, n).matrix) for n in path.base.levels)
            if worst > eps_b:
                raise ValueError(f"||A({lam:g})|| = {worst:.4g} exceeds the bounded budget {eps_b:.4g}")
        mode = "budget"
    elif all(t_compactness_score(path.base, lambda n, lam=lam: path.A(lam, n).matrix).compact
             for lam in path.lambdas):
        mode = "t_compact"
    else:
        mode = "unchecked"
    verdicts = [fredholm_detect(path.family(lam), delta_low, delta_high) for lam in path.lambdas]
    ok = all(v.is_fredholm for v in verdicts) if mode != "unchecked" else True
    return PathCheck(verdicts, mode, ok, details)


def _spectra(path: OperatorPath, level: int) -> np.ndarray:
    return np.array([np.linalg.eigvalsh(path.at(lam, level).matrix) for lam in path.lambdas])


def spectral_flow(path: OperatorPath, level: int, *, delta_low: float = DELTA_LOW) -> int:
    """Signed count of eigenvalues of t + A_lambda crossing zero at one truncation level.

    Eigenvalues are matched in sorted order between grid points; each sign
    change contributes the sign of the discrete slope.
    """
    if path.base.m != 1:
        raise ValueError("spectral_flow is defined for the Hilbert-space case m = 1 only")
    spec = _spectra(path, level)
    for end, lam in ((spec[0], path.lambdas[0]), (spec[-1], path.lambdas[-1])):
        if np.min(np.abs(end)) < delta_low:
            raise ValueError(f"path endpoints not invertible (eigenvalue near 0 at lambda={lam:g})")
    interior = spec[1:-1]
    if interior.size and np.min(np.abs(interior)) < delta_low:
        warnings.warn(f"{path.label}: eigenvalue within {delta_low:g} of zero at an interior grid point; "
                      "tangential crossings are not resolved", DegenerateCrossingWarning, stacklevel=2)
    flow = 0
    for before, after in zip(spec, spec[1:]):
        up = (before < 0) & (after >= 0)
        down = (before >= 0) & (after < 0)
        flow += int(np.sum(up)) - int(np.sum(down))
    return flow
