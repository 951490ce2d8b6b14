"""Verification suites run by the ``verify`` command.

Each suite returns a list of :class:`ReportRecord`. Randomness is drawn from
a generator seeded by (seed, suite), so a suite gives the same records
whether it runs alone or as part of ``all``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from regfred import families
from regfred.config import SUITES, ExperimentConfig, FamilySpec
from regfred.fredholm import (
    cayley_criterion,
    compact_resolvent_check,
    fredholm_detect,
    stability_radius,
)
from regfred.gapmetric import (
    cayley_sandwich,
    d_metric,
    doubling_isometry_check,
    gap,
    graph_projection,
    projection_oracle,
)
from regfred.matalg import is_unitary, op_norm, random_complex, random_hermitian
from regfred.paths import DegenerateCrossingWarning, OperatorPath, gap_continuity_modulus, path_fredholm_check, spectral_flow
from regfred.perturb import (
    bounded_identity_residual,
    bounded_stability_experiment,
    compact_stability_experiment,
    gap_ball_family,
    gap_open_experiment,
    relbound_budget,
    relbound_stability_experiment,
    t_compactness_score,
    unbounded_identity_residual,
)
from regfred.regop import (
    RegularOperator,
    cayley,
    cayley_factorization_check,
    inverse_cayley,
    resolvent,
    resolvent_from_transforms,
    transforms,
)

# one entry per verified statement; records must use one of these keys
ANCHORS = {
    "cayley-factorization": "I + C_t = 2 F_t (F_t - i Q_t) with F_t - i Q_t unitary",
    "resolvent-formula": "(t -+ i)^-1 = t R_t +- i R_t and ||(t -+ i)^-1|| <= 2",
    "cayley-bijection": "the Cayley transform is invertible on unitaries with I - U invertible",
    "cayley-difference-bounded": "C_{t+D} - C_t = (I - C_t) D (D + t + i)^-1",
    "cayley-difference-unbounded": "C_{t+s} - C_t = (I - C_t) s (s + t + i)^-1",
    "graph-projection": "explicit block form of the graph projection",
    "d-metric": "resolvent metric d versus the gap metric",
    "cayley-sandwich": "||C_t - C_s||/4 <= d(t, s) <= ||C_t - C_s||/2",
    "doubling-isometry": "d(t, s) = d(double t, double s)",
    "cayley-criterion": "t Fredholm iff I + C_t Fredholm",
    "compact-resolvent": "compact (t + i)^-1 implies Fredholm",
    "stability-radius": "norm-small perturbations of bounded Fredholm operators stay Fredholm",
    "doubling-fredholm": "double(t) Fredholm when t is",
    "unitary-invariance": "U A V Fredholm for invertible U, V",
    "bounded-stability": "t + D Fredholm for ||D|| <= eps",
    "compact-stability": "t + K Fredholm for compact or t-compact K",
    "relbound-stability": "relatively bounded perturbations with small bound preserve Fredholmness",
    "t-compactness": "s t-compact iff s (t + i)^-1 compact",
    "gap-openness": "Fredholm operators form a gap-open set",
    "path-continuity": "||C_{t+A_l} - C_{t+A_m}|| <= 4 ||A_l - A_m||",
    "path-fredholm": "t + A_lambda is a path of Fredholm operators",
    "extension": "not a stated result; artifact-level consistency check",
}

SUITE_INDEX = {name: i for i, name in enumerate(SUITES)}


@dataclass(frozen=True)
class ReportRecord:
    suite: str
    case_id: str
    anchor: str
    measured: float
    budget: float
    passed: bool
    seconds: float = 0.0

    def __post_init__(self):
        if self.anchor not in ANCHORS:
            raise ValueError(f"unregistered anchor {self.anchor!r}")


class _Recorder:
    def __init__(self, suite: str):
        self.suite = suite
        self.records: list[ReportRecord] = []
        self._t = time.perf_counter()

    def add(self, case_id, anchor, measured, budget, passed):
        now = time.perf_counter()
        self.records.append(ReportRecord(self.suite, case_id, anchor, float(measured), float(budget),
                                         bool(passed), now - self._t))
        self._t = now


def suite_rng(cfg: ExperimentConfig, suite: str) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, SUITE_INDEX[suite]])


# ---- identities ---------------------------------------------------------

def run_identities(cfg: ExperimentConfig) -> list[ReportRecord]:
    rng = suite_rng(cfg, "identities")
    tol = cfg.tolerances.identity_tol
    rec = _Recorder("identities")
    for i in range(cfg.cases):
        n = int(rng.integers(2, 65))
        t = RegularOperator(random_hermitian(rng, n, float(rng.uniform(0.1, 10.0))), True)
        res, unitary_ok = cayley_factorization_check(t)
        rec.add(f"factorization/{i}", "cayley-factorization", res, tol, res <= tol and unitary_ok)
    for i in range(cfg.cases):
        n = int(rng.integers(2, 65))
        t = RegularOperator(random_hermitian(rng, n, float(rng.uniform(0.1, 10.0))), True)
        b = transforms(t)
        agree, worst_norm, wrong = 0.0, 0.0, math.inf
        for sign in (1, -1):
            direct = resolvent(t, sign)
            agree = max(agree, op_norm(direct - resolvent_from_transforms(t, sign, b)))
            worst_norm = max(worst_norm, op_norm(direct))
        # the minus-sign variant F Q - i Q^2 must not reproduce (t - i)^-1
        wrong = op_norm(resolvent(t, 1) - (b.F @ b.Q - 1j * b.R))
        rec.add(f"resolvent/{i}", "resolvent-formula", agree, tol,
                agree <= tol and worst_norm <= 2.0 and wrong > 1e3 * tol)
        rec.add(f"resolvent-norm/{i}", "resolvent-formula", worst_norm, 2.0, worst_norm <= 2.0)
    for i in range(cfg.cases):
        n = int(rng.integers(2, 65))
        t = RegularOperator(random_hermitian(rng, n, float(rng.uniform(0.1, 10.0))), True)
        back = inverse_cayley(cayley(t))
        err = op_norm(back.matrix - t.matrix) / (1.0 + op_norm(t.matrix))
        rec.add(f"inverse-cayley/{i}", "cayley-bijection", err, 1e-8,
                err <= 1e-8 and is_unitary(cayley(t), tol))
    for i in range(2 * cfg.cases):
        n = int(rng.integers(2, 65))
        stress = i % 4 == 3
        t_scale = 1e3 if stress else float(rng.uniform(0.1, 10.0))
        p_scale = 1e3 if stress or i % 4 == 2 else float(rng.uniform(1e-3, 10.0))
        t = RegularOperator(random_hermitian(rng, n, t_scale), True)
        d = RegularOperator(random_hermitian(rng, n, p_scale), True)
        r_b = bounded_identity_residual(t, d)
        rec.add(f"bounded-identity/{i}", "cayley-difference-bounded", r_b, tol, r_b <= tol)
        r_u = unbounded_identity_residual(t, d)
        rec.add(f"unbounded-identity/{i}", "cayley-difference-unbounded", r_u, tol, r_u <= tol)
    return rec.records


# ---- gap -----------------------------------------------------------------

def run_gap(cfg: ExperimentConfig) -> list[ReportRecord]:
    rng = suite_rng(cfg, "gap")
    tol = cfg.tolerances.identity_tol
    rec = _Recorder("gap")
    for i in range(cfg.cases):
        n = int(rng.integers(1, 33))
        scale = float(rng.uniform(0.1, 10.0))
        a = random_hermitian(rng, n, scale) if i % 3 == 0 else random_complex(rng, n, scale)
        err = op_norm(graph_projection(a).P - projection_oracle(a))
        rec.add(f"projection/{i}", "graph-projection", err, tol, err <= tol)
    for i in range(cfg.cases // 2):
        n = int(rng.integers(1, 33))
        t = random_hermitian(rng, n, float(rng.uniform(0.1, 10.0)))
        s = random_hermitian(rng, n, float(rng.uniform(0.1, 10.0)))
        sw = cayley_sandwich(t, s)
        rec.add(f"sandwich/{i}", "cayley-sandwich", sw.mid, sw.upper, sw.ok)
    for i in range(cfg.cases // 2):
        n = int(rng.integers(1, 33))
        t = random_complex(rng, n, float(rng.uniform(0.1, 10.0)))
        s = random_complex(rng, n, float(rng.uniform(0.1, 10.0)))
        err = doubling_isometry_check(t, s)
        rec.add(f"doubling/{i}", "doubling-isometry", err, tol, err <= tol)
        g, dd = gap(t, s), d_metric(t, s)
        rec.add(f"equivalence/{i}", "d-metric", g / dd if dd > 0 else 0.0, math.inf,
                (g <= tol) == (dd <= tol))
    zero, one = np.zeros((1, 1)), np.eye(1)
    g = gap(zero, one)
    rec.add("spot/gap(0,1)", "graph-projection", g, 1e-12, abs(g - 1 / math.sqrt(2)) <= 1e-12)
    dd = d_metric(zero, one)
    rec.add("spot/d(0,1)", "d-metric", dd, 1e-12, abs(dd - 0.5) <= 1e-12)
    return rec.records


# ---- fredholm --------------------------------------------------------------

def _expectation_ok(spec: FamilySpec, verdict) -> bool:
    ok = True
    if "fredholm" in spec.expect:
        ok &= verdict.is_fredholm == bool(spec.expect["fredholm"])
    if "index" in spec.expect and verdict.is_fredholm:
        ok &= verdict.index == int(spec.expect["index"])
    return ok


def run_fredholm(cfg: ExperimentConfig) -> list[ReportRecord]:
    tl = cfg.tolerances
    rec = _Recorder("fredholm")
    for spec in cfg.families:
        fam = spec.build(cfg.levels)
        v = fredholm_detect(fam, tl.delta_low, tl.delta_high)
        rec.add(f"detect/{spec.name}", "extension", v.essential_gap, tl.delta_high, _expectation_ok(spec, v))
        if v.is_fredholm and v.index is not None:
            rec.add(f"index/{spec.name}", "extension", v.index, spec.expect.get("index", v.index),
                    _expectation_ok(spec, v))
        dv = fredholm_detect(families.doubled(fam), tl.delta_low, tl.delta_high)
        rec.add(f"doubling/{spec.name}", "doubling-fredholm", dv.essential_gap, tl.delta_high,
                dv.is_fredholm == v.is_fredholm and (not dv.is_fredholm or dv.index == 0))
        cv = fredholm_detect(families.conjugated(fam), tl.delta_low, tl.delta_high)
        rec.add(f"unitary/{spec.name}", "unitary-invariance", cv.essential_gap, tl.delta_high,
                cv.is_fredholm == v.is_fredholm and cv.index == v.index)
        if fam.selfadjoint:
            lhs, rhs, agree = cayley_criterion(fam, tl.delta_low, tl.delta_high)
            rec.add(f"criterion/{spec.name}", "cayley-criterion", lhs.essential_gap, tl.delta_high, agree)
            rc = compact_resolvent_check(fam, tl.delta_low, tl.delta_high)
            rec.add(f"compact-resolvent/{spec.name}", "compact-resolvent", rc.identity_residual,
                    tl.identity_tol,
                    rc.identity_residual <= tl.identity_tol and (rc.verdict.is_fredholm or not rc.resolvent_compact))
        if v.is_fredholm:
            target = fam if fam.selfadjoint else families.doubled(fam)
            eps_c, eps_b = stability_radius(target, tl.delta_low, tl.delta_high)
            rec.add(f"radius/{spec.name}", "stability-radius", eps_c, eps_b,
                    eps_b > 0 and eps_b == eps_c / 4.0)
    return rec.records


# ---- perturb --------------------------------------------------------------

def corner_perturbation(n: int, values=(100.0, 50.0, 25.0)) -> np.ndarray:
    """Finite-rank diagonal perturbation in the top-left corner."""
    k = np.zeros((n, n), dtype=np.complex128)
    k[np.arange(len(values)), np.arange(len(values))] = values
    return k


def run_perturb(cfg: ExperimentConfig) -> list[ReportRecord]:
    tl = cfg.tolerances
    kw = dict(delta_low=tl.delta_low, delta_high=tl.delta_high)
    rec = _Recorder("perturb")
    for spec in cfg.families:
        fam = spec.build(cfg.levels)
        if not fredholm_detect(fam, tl.delta_low, tl.delta_high).is_fredholm:
            continue
        seed = cfg.seed
        r = compact_stability_experiment(fam, corner_perturbation, **kw)
        rec.add(f"compact/{spec.name}", "compact-stability", r.measured, r.budget, r.passed)
        if fam.selfadjoint:
            _, eps_b = stability_radius(fam, tl.delta_low, tl.delta_high)
            dgen = lambda n: random_hermitian(np.random.default_rng([seed, n]), n, eps_b / 2)  # noqa: E731
        else:
            _, eps_b = stability_radius(families.doubled(fam), tl.delta_low, tl.delta_high)
            # diagonal phases: non-selfadjoint, and consistent from level to level
            dgen = lambda n: (eps_b / 2) * families.phase_unitary(n)  # noqa: E731
        r = bounded_stability_experiment(fam, dgen, **kw)
        rec.add(f"bounded/{spec.name}", "bounded-stability", r.measured, r.budget, r.passed)
        if not fam.selfadjoint:
            continue
        eps_c, _ = stability_radius(fam, tl.delta_low, tl.delta_high)
        budget = relbound_budget(eps_c)
        r = relbound_stability_experiment(fam, lambda n: (budget / 2) * np.eye(n), seed=seed, **kw)
        rec.add(f"relbound/{spec.name}", "relbound-stability", r.measured, r.budget,
                r.passed and r.details["chain_ok"])
        r = relbound_stability_experiment(fam, lambda n: -fam.at(n).matrix, seed=seed, **kw)
        rec.add(f"relbound-sharpness/{spec.name}", "relbound-stability", r.measured, r.budget,
                not r.passed and not r.perturbed_verdict.is_fredholm and r.details["chain_ok"])
        ident = t_compactness_score(fam, lambda n: np.eye(n))
        self_ = t_compactness_score(fam, lambda n: fam.at(n).matrix)
        resolvent_compact = compact_resolvent_check(fam, tl.delta_low, tl.delta_high).resolvent_compact
        rec.add(f"t-compact/{spec.name}", "t-compactness", ident.counts[-1], self_.counts[-1],
                ident.compact == resolvent_compact and not self_.compact
                and max(ident.identity_residual, self_.identity_residual) <= tl.identity_tol)
        kinds = ("bounded", "relative", "diagonal")
        for j in range(cfg.gap_samples):
            pert = gap_ball_family(fam, eps_c / 4, seed * 1000 + j, kinds[j % 3], amplitude=eps_c / 2)
            r = gap_open_experiment(fam, pert, **kw)
            rec.add(f"gap-open/{spec.name}/{j}", "gap-openness", r.measured, r.budget, r.passed)
    return rec.records


# ---- paths ------------------------------------------------------------------

def shipped_paths(fam, eps_b: float, seed: int) -> list[OperatorPath]:
    dirs = {}

    def direction(lam, n):
        # lam * K for a fixed seeded Hermitian K with ||K|| = eps_b / 2
        if n not in dirs:
            dirs[n] = random_hermitian(np.random.default_rng([seed, n]), n, eps_b / 2)
        return lam * dirs[n]

    return [
        OperatorPath(fam, np.linspace(0.0, 1.0, 5), direction, "direction"),
        OperatorPath(fam, np.linspace(-eps_b, eps_b, 7), lambda lam, n: lam * np.eye(n), "scalar"),
        OperatorPath(fam, np.linspace(0.0, 100.0, 6),
                     lambda lam, n: corner_perturbation(n, (lam,)), "rank-one"),
    ]


def sign_path(lo=-2.0, hi=2.0, points=40) -> OperatorPath:
    """diag(-1, 1) + lambda I at level 2."""
    base = families.diagonal(lambda k: np.where(k == 1, -1.0, 1.0), (2, 3, 4), "sign")
    return OperatorPath(base, np.linspace(lo, hi, points), lambda lam, n: lam * np.eye(n), "sign+lambda")


def run_paths(cfg: ExperimentConfig) -> list[ReportRecord]:
    tl = cfg.tolerances
    rec = _Recorder("paths")
    for spec in cfg.families:
        fam = spec.build(cfg.levels)
        if not fam.selfadjoint or not fredholm_detect(fam, tl.delta_low, tl.delta_high).is_fredholm:
            continue
        _, eps_b = stability_radius(fam, tl.delta_low, tl.delta_high)
        for path in shipped_paths(fam, eps_b, cfg.seed):
            cont = gap_continuity_modulus(path)
            rec.add(f"continuity/{spec.name}/{path.label}", "path-continuity", cont.max_ratio, 4.0,
                    cont.ok and cont.d_ok)
            check = path_fredholm_check(path, require_budget=path.label != "rank-one",
                                        delta_low=tl.delta_low, delta_high=tl.delta_high)
            rec.add(f"fredholm/{spec.name}/{path.label}", "path-fredholm",
                    min(v.essential_gap for v in check.verdicts), tl.delta_high,
                    check.ok and check.mode != "unchecked")
    path = sign_path()
    sf = spectral_flow(path, 2)
    rec.add("spectral-flow/sign", "extension", sf, 2, sf == 2)
    rev = spectral_flow(path.reversed(), 2)
    rec.add("spectral-flow/reversed", "extension", rev, -2, rev == -sf)
    for factor in (2, 4):
        with warnings.catch_warnings():
            # the x4 grid samples the crossings exactly; the count is still well defined
            warnings.simplefilter("ignore", DegenerateCrossingWarning)
            ref = spectral_flow(path.refined(factor), 2)
        rec.add(f"spectral-flow/refined-x{factor}", "extension", ref, sf, ref == sf)
    left, right = sign_path(-2.0, 0.0, 20), sign_path(0.0, 2.0, 20)
    right.base = left.base
    joined = spectral_flow(left.concat(right), 2)
    parts = spectral_flow(left, 2) + spectral_flow(right, 2)
    rec.add("spectral-flow/concatenation", "extension", joined, parts, joined == parts)
    return rec.records


RUNNERS = {
    "identities": run_identities,
    "gap": run_gap,
    "fredholm": run_fredholm,
    "perturb": run_perturb,
    "paths": run_paths,
}
