"""Fredholm stability under bounded, compact, relatively bounded, relatively
compact and gap-small perturbations, run as experiments on truncated families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from regfred.families import doubled
from regfred.fredholm import (
    DELTA_HIGH,
    DELTA_LOW,
    FredholmVerdict,
    TruncatedFamily,
    fredholm_detect,
    saturation_count,
    stability_radius,
)
from regfred.gapmetric import d_metric
from regfred.matalg import adjoint, as_operator, op_norm, random_hermitian
from regfred.regop import RegularOperator, as_regular, cayley, double, transforms

THEOREMS = ("bounded", "compact", "rel_bounded", "t_compact", "gap_open")

Generator = Callable[[int], np.ndarray]


@dataclass
class PerturbationReport:
    theorem: str
    base_verdict: FredholmVerdict
    perturbed_verdict: FredholmVerdict
    budget: float
    measured: float
    passed: bool
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ValueError(f"unknown theorem tag {self.theorem!r}")


def _selfadjoint_pair(t, d, what):
    t = as_regular(t)
    d = as_regular(d)
    if not (t.selfadjoint and d.selfadjoint):
        raise ValueError(f"{what} requires selfadjoint inputs")
    if t.n != d.n:
        raise ValueError(f"{what}: size mismatch {t.n} vs {d.n}")
    return t, d


def _cayley_difference_residual(t: RegularOperator, s: RegularOperator) -> float:
    eye = np.eye(t.n)
    ct = cayley(t)
    ts = RegularOperator(t.matrix + s.matrix, True)
    rhs = (eye - ct) @ s.matrix @ np.linalg.inv(ts.matrix + 1j * eye)
    return op_norm(cayley(ts) - ct - rhs)


def bounded_identity_residual(t, D) -> float:
    """|| (C_{t+D} - C_t) - (I - C_t) D (D + t + i)^-1 ||."""
    t, D = _selfadjoint_pair(t, D, "bounded_identity_residual")
    return _cayley_difference_residual(t, D)


def unbounded_identity_residual(t, s) -> float:
    """Same identity with a selfadjoint (unbounded in the family sense) s."""
    t, s = _selfadjoint_pair(t, s, "unbounded_identity_residual")
    return _cayley_difference_residual(t, s)


# ---- relative bound -----------------------------------------------------

def _ratio(s, u, x):
    return np.linalg.norm(s @ x, axis=0) / (np.linalg.norm(u @ x, axis=0) + 1.0)


def _ascend(s, u, x, iters, tol=1e-12):
    """Projected gradient ascent of ||s x|| / (||u x|| + 1) on the unit sphere.

    Columns of ``x`` are independent starts, each with its own step size.
    Returns the best value reached per column.
    """
    x = x / np.linalg.norm(x, axis=0)
    sh_s, uh_u = adjoint(s) @ s, adjoint(u) @ u
    val = _ratio(s, u, x)
    step = np.ones(x.shape[1])
    best, stale = val.max(), 0
    for _ in range(iters):
        na = np.linalg.norm(s @ x, axis=0)
        nb = np.linalg.norm(u @ x, axis=0)
        ga = (sh_s @ x) / np.where(na > 0, na, np.inf)
        gb = (uh_u @ x) / np.where(nb > 0, nb, np.inf)
        g = (ga * (nb + 1.0) - na * gb) / (nb + 1.0) ** 2
        g = g - x * np.sum(x.conj() * g, axis=0)
        active = (np.linalg.norm(g, axis=0) >= tol) & (step > 1e-14)
        if not active.any():
            break
        y = x + step * g
        y = y / np.linalg.norm(y, axis=0)
        new = _ratio(s, u, y)
        better = active & (new > val)
        x = np.where(better, y, x)
        val = np.where(better, new, val)
        step = np.where(better, 2.0 * step, 0.5 * step)
        if val.max() > best * (1.0 + 1e-12):
            best, stale = val.max(), 0
        else:
            stale += 1
            if stale >= 25:
                break
    return val


def relative_bound(t, s, restarts: int = 16, *, seed: int = 0, iters: int = 200) -> float:
    """Estimate sup_{||x||=1} ||s x|| / (||(t+s) x|| + 1).

    Every eigenvector of s*s and (t+s)*(t+s) is evaluated; the best few and
    ``restarts`` seeded random vectors then seed a projected gradient ascent.
    The result is attained by a concrete vector, so it is a lower bound on
    the supremum.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    a = as_regular(t).matrix
    b = as_regular(s).matrix
    if a.shape != b.shape:
        raise ValueError("relative_bound: size mismatch")
    if not np.any(b):
        return 0.0
    u = a + b
    cands = np.hstack([np.linalg.eigh(adjoint(b) @ b)[1], np.linalg.eigh(adjoint(u) @ u)[1]])
    vals = _ratio(b, u, cands)
    best = float(vals.max())
    rng = np.random.default_rng(seed)
    n = a.shape[0]
    starts = np.hstack([
        cands[:, np.argsort(vals)[::-1][:4]],
        rng.standard_normal((n, restarts)) + 1j * rng.standard_normal((n, restarts)),
    ])
    return max(best, float(_ascend(b, u, starts, iters).max()))


# ---- experiments ---------------------------------------------------------

def _require_fredholm(fam, what, delta_low, delta_high):
    v = fredholm_detect(fam, delta_low, delta_high)
    if not v.is_fredholm:
        raise ValueError(f"{what}: base family {fam.label!r} is not Fredholm ({v.diagnostic})")
    return v


def relbound_budget(eps_cayley: float) -> float:
    """min(1/4, eps'/10) with the Cayley-level radius eps' = 2 * eps_cayley."""
    return min(0.25, 2.0 * eps_cayley / 10.0)


def relbound_stability_experiment(fam: TruncatedFamily, sgen: Generator, *, restarts: int = 16,
                                  seed: int = 0, delta_low: float = DELTA_LOW,
                                  delta_high: float = DELTA_HIGH) -> PerturbationReport:
    """Relatively bounded perturbation t + s with budget min(1/4, eps'/10), eps' = 2 eps_cayley."""
    if not fam.selfadjoint:
        raise ValueError("relbound_stability_experiment requires a selfadjoint family")
    base = _require_fredholm(fam, "relbound_stability_experiment", delta_low, delta_high)
    eps_c, _ = stability_radius(fam, delta_low, delta_high)
    budget = relbound_budget(eps_c)
    measured = 0.0
    chain_ok = True
    resolvent_terms, cayley_terms = {}, {}
    bounds = {}
    for n, t in fam:
        s = RegularOperator(as_operator(sgen(n)), True)
        eps_n = relative_bound(t, s, restarts, seed=seed + n)
        bounds[n] = eps_n
        measured = max(measured, eps_n)
        eye = np.eye(t.n)
        ts = t.matrix + s.matrix
        sres = op_norm(s.matrix @ np.linalg.inv(ts + 1j * eye))
        dc = op_norm(cayley(RegularOperator(ts, True)) - cayley(t))
        resolvent_terms[n], cayley_terms[n] = sres, dc
        chain_ok &= sres <= 5.0 * eps_n + 1e-8 and dc <= 10.0 * eps_n + 1e-8
    pert = fredholm_detect(fam.plus(sgen), delta_low, delta_high)
    passed = measured <= budget and base.is_fredholm and pert.is_fredholm and chain_ok
    return PerturbationReport("rel_bounded", base, pert, budget, measured, passed, {
        "eps_cayley": eps_c, "chain_ok": chain_ok, "relative_bounds": bounds,
        "s_resolvent_norms": resolvent_terms, "cayley_shifts": cayley_terms,
    })


@dataclass(frozen=True)
class TCompactness:
    per_level_singulars: dict
    compact: bool
    identity_residual: float
    counts: tuple[int, ...]


def t_compactness_score(fam: TruncatedFamily, sgen: Generator, tau: float | None = None) -> TCompactness:
    """Singular values of s (t + i)^-1 per level and a decay verdict.

    For non-selfadjoint t the graph-module form s Q_t is profiled instead; it
    has the same singular values when t is selfadjoint.
    """
    table = {}
    residual = 0.0
    for n, t in fam:
        s = as_operator(sgen(n))
        if s.shape != t.matrix.shape:
            raise ValueError(f"level {n}: perturbation shape {s.shape} vs {t.matrix.shape}")
        eye = np.eye(t.n)
        if t.selfadjoint:
            rt = np.linalg.inv(t.matrix + 1j * eye)
            k = s @ rt
            rts = np.linalg.inv(t.matrix + s + 1j * eye)
            residual = max(residual, op_norm(rts - (rt - rts @ s @ rt)))
        else:
            k = s @ transforms(t).Q
        table[n] = np.sort(np.linalg.svd(k, compute_uv=False))
    compact, counts = saturation_count(table, DELTA_HIGH if tau is None else tau)
    return TCompactness(table, compact, residual, tuple(counts))


def compact_stability_experiment(fam: TruncatedFamily, sgen: Generator, *, delta_low: float = DELTA_LOW,
                                 delta_high: float = DELTA_HIGH) -> PerturbationReport:
    """t + s for t-compact s: Fredholm with unchanged index, no size budget."""
    base = _require_fredholm(fam, "compact_stability_experiment", delta_low, delta_high)
    score = t_compactness_score(fam, sgen)
    if not score.compact:
        raise ValueError(f"perturbation is not {fam.label}-compact (counts above threshold {score.counts})")
    pert = fredholm_detect(fam.plus(sgen), delta_low, delta_high)
    measured = max(op_norm(as_operator(sgen(n))) for n in fam.levels)
    index_ok = base.index is None or pert.index == base.index
    passed = base.is_fredholm and pert.is_fredholm and index_ok
    return PerturbationReport("compact", base, pert, math.inf, measured, passed, {
        "index_preserved": index_ok, "counts": score.counts,
        "identity_residual": score.identity_residual,
    })


def bounded_stability_experiment(fam: TruncatedFamily, Dgen: Generator, *, delta_low: float = DELTA_LOW,
                                 delta_high: float = DELTA_HIGH) -> PerturbationReport:
    """t + D with ||D|| <= eps_bounded.

    Non-selfadjoint t or D is lifted to the doubled picture, where the budget
    is computed and the norm identity ||double(D)|| = ||D|| is checked.
    """
    base = _require_fredholm(fam, "bounded_stability_experiment", delta_low, delta_high)
    mats = {n: as_operator(Dgen(n)) for n in fam.levels}
    selfadj = fam.selfadjoint and all(RegularOperator(d).selfadjoint for d in mats.values())
    details = {"lifted": not selfadj}
    if selfadj:
        _, budget = stability_radius(fam, delta_low, delta_high)
        measured = max(op_norm(d) for d in mats.values())
        norm_ok = True
    else:
        _, budget = stability_radius(doubled(fam), delta_low, delta_high)
        measured, norm_gap = 0.0, 0.0
        for d in mats.values():
            nd = op_norm(double(d).matrix)
            measured = max(measured, nd)
            norm_gap = max(norm_gap, abs(nd - op_norm(d)))
        norm_ok = norm_gap <= 1e-12
        details["doubling_norm_gap"] = norm_gap
        lifted = doubled(fam).derive(lambda n, t: t.matrix + double(mats[n]).matrix, "double(t+D)")
        details["lifted_verdict"] = fredholm_detect(lifted, delta_low, delta_high)
    pert = fredholm_detect(fam.plus(mats.__getitem__), delta_low, delta_high)
    asserted = measured <= budget
    details["asserted"] = asserted
    passed = asserted and norm_ok and base.is_fredholm and pert.is_fredholm
    if not selfadj:
        passed = passed and details["lifted_verdict"].is_fredholm
    return PerturbationReport("bounded", base, pert, budget, measured, passed, details)


def gap_open_experiment(fam: TruncatedFamily, perturbed: TruncatedFamily, *, delta_low: float = DELTA_LOW,
                        delta_high: float = DELTA_HIGH) -> PerturbationReport:
    """Families within d-distance eps_cayley/4 of a Fredholm family stay Fredholm.

    Non-selfadjoint pairs are compared through their doublings, which leaves d unchanged.
    """
    if fam.levels != perturbed.levels:
        raise ValueError("gap_open_experiment: level mismatch")
    base = _require_fredholm(fam, "gap_open_experiment", delta_low, delta_high)
    if fam.selfadjoint and perturbed.selfadjoint:
        ref, other = fam, perturbed
    else:
        ref, other = doubled(fam), doubled(perturbed)
    eps_c, _ = stability_radius(ref, delta_low, delta_high)
    budget = eps_c / 4.0
    measured = 0.0
    cayley_shift = 0.0
    for n in fam.levels:
        t, s = ref.at(n), other.at(n)
        measured = max(measured, d_metric(t, s))
        cayley_shift = max(cayley_shift, op_norm(cayley(t) - cayley(s)))
    pert = fredholm_detect(perturbed, delta_low, delta_high)
    passed = measured <= budget and base.is_fredholm and pert.is_fredholm
    return PerturbationReport("gap_open", base, pert, budget, measured, passed, {
        "eps_cayley": eps_c, "cayley_shift": cayley_shift,
        "cayley_within_radius": cayley_shift <= 4.0 * measured + 1e-10,
    })


def _symmetric_perturbation(kind: str, rng_seed: int, t: np.ndarray, amplitude: float) -> np.ndarray:
    rng = np.random.default_rng(rng_seed)
    n = t.shape[0]
    if kind == "bounded":
        return random_hermitian(rng, n, amplitude)
    if kind == "relative":
        # t -> (1 + amplitude) t plus a small bounded part
        return amplitude * t + random_hermitian(rng, n, 0.5 * amplitude)
    if kind == "diagonal":
        return np.diag(amplitude * rng.uniform(-1.0, 1.0, n)).astype(np.complex128)
    raise ValueError(f"unknown perturbation kind {kind!r}")


def gap_ball_family(fam: TruncatedFamily, radius: float, seed: int, kind: str = "bounded",
                    amplitude: float | None = None) -> TruncatedFamily:
    """A seeded selfadjoint perturbation of ``fam`` with d(s_n, t_n) <= radius at every level.

    The amplitude starts at ``amplitude`` (default: radius) and is halved until
    the measured distance fits inside the radius.
    """
    amp = radius if amplitude is None else amplitude
    for _ in range(60):
        mats = {}
        fits = True
        for n, t in fam:
            s = t.matrix + _symmetric_perturbation(kind, seed * 100003 + n, t.matrix, amp)
            s = RegularOperator(0.5 * (s + adjoint(s)), True)
            if d_metric(t, s) > radius:
                fits = False
                break
            mats[n] = s
        if fits:
            return fam.derive(lambda n, t, mats=mats: mats[n], f"{fam.label}~{kind}{seed}")
        amp *= 0.5
    raise RuntimeError("could not fit perturbation inside the gap radius")
