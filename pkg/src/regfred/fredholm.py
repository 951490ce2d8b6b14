"""Level-indexed Fredholm semantics for truncated operator families.

A single matrix is trivially Fredholm, so every verdict here is a property of
a family t_n over at least three truncation levels: the probed operator must
show a singular-value split that is stable in n. Kernel and cokernel ranks
count only null vectors that persist from one level to the next under the
family's level embedding; null vectors that ride the truncation edge (the
e_n of a truncated shift) are discarded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from regfred.matalg import as_operator
from regfred.regop import RegularOperator, as_regular, cayley, resolvent, transforms

log = logging.getLogger(__name__)

DELTA_LOW = 1e-6
DELTA_HIGH = 1e-2
PERSIST_TOL = 1e-3
PROBES = ("F", "I+C", "raw")


def pad_embedding(n_from: int, n_to: int) -> np.ndarray:
    e = np.zeros((n_to, n_from))
    e[: min(n_from, n_to), : min(n_from, n_to)] = np.eye(min(n_from, n_to))
    return e


class TruncatedFamily:
    """A map from truncation level to a matrix realization of one operator.

    Parameters
    ----------
    generator : callable
        ``n -> RegularOperator`` (or a square array).
    levels : sequence of int
        Ascending evaluation levels.
    embed : callable, optional
        ``(n, n') -> isometry`` carrying the level-n space into level n'.
        Defaults to zero padding, which is right for families whose level-n
        matrix is the top-left corner of level n'.
    nested : bool
        Declares that level n is the top-left corner of every later level.
    m : int
        Coefficient algebra size (M_m(C)); index is only reported for m = 1.
    """

    def __init__(
        self,
        generator: Callable[[int], RegularOperator | np.ndarray],
        levels,
        label: str = "",
        *,
        embed: Callable[[int, int], np.ndarray] | None = None,
        nested: bool = False,
        m: int = 1,
    ):
        levels = tuple(int(n) for n in levels)
        if not levels or any(n <= 0 for n in levels):
            raise ValueError("levels must be positive integers")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"levels must be strictly ascending, got {levels}")
        self.generator = generator
        self.levels = levels
        self.label = label
        self.nested = nested
        self.m = m
        self._embed = embed
        self._cache: dict[int, RegularOperator] = {}
        self._verdicts: dict[tuple, "FredholmVerdict"] = {}

    def __repr__(self):
        return f"TruncatedFamily({self.label!r}, levels={self.levels})"

    def at(self, n: int) -> RegularOperator:
        if n not in self._cache:
            t = as_regular(self.generator(n), f"{self.label}[{n}]")
            if t.n % self.m:
                raise ValueError(f"level {n}: size {t.n} is not a multiple of m={self.m}")
            self._cache[n] = t
        return self._cache[n]

    def __iter__(self):
        return ((n, self.at(n)) for n in self.levels)

    def embedding(self, n_from: int, n_to: int) -> np.ndarray:
        if self._embed is not None:
            return self._embed(n_from, n_to)
        return pad_embedding(self.at(n_from).n, self.at(n_to).n)

    @property
    def selfadjoint(self) -> bool:
        return all(t.selfadjoint for _, t in self)

    def check_nested(self, tol: float = 1e-12) -> bool:
        """Top-left agreement between consecutive levels (meaningful for nested families)."""
        for a, b in zip(self.levels, self.levels[1:]):
            ta, tb = self.at(a).matrix, self.at(b).matrix
            k = ta.shape[0]
            if np.max(np.abs(tb[:k, :k] - ta), initial=0.0) > tol:
                return False
        return True

    def derive(self, fn: Callable[[int, RegularOperator], np.ndarray], label: str, *,
               keep_nesting: bool = False) -> "TruncatedFamily":
        """New family n -> fn(n, t_n) sharing levels and embedding."""
        return TruncatedFamily(
            lambda n: fn(n, self.at(n)),
            self.levels,
            label,
            embed=self._embed,
            nested=self.nested and keep_nesting,
            m=self.m,
        )

    def plus(self, sgen: Callable[[int], np.ndarray], label: str | None = None) -> "TruncatedFamily":
        """The family t_n + s_n."""
        return self.derive(
            lambda n, t: t.matrix + as_operator(sgen(n)),
            label or f"{self.label}+s",
        )

    def with_levels(self, levels) -> "TruncatedFamily":
        return TruncatedFamily(self.generator, levels, self.label, embed=self._embed,
                               nested=self.nested, m=self.m)


@dataclass(frozen=True)
class FredholmVerdict:
    is_fredholm: bool
    kernel_rank: int
    cokernel_rank: int
    index: int | None
    essential_gap: float
    per_level_singulars: Mapping[int, np.ndarray] = field(repr=False)
    probe: str = "F"
    diagnostic: str = ""


def probe_matrix(t: RegularOperator, probe: str) -> np.ndarray:
    if probe == "F":
        return transforms(t).F
    if probe == "I+C":
        return np.eye(t.n) + cayley(t)
    if probe == "raw":
        return t.matrix
    raise ValueError(f"unknown probe {probe!r}; expected one of {PROBES}")


def _singular_decomposition(t: RegularOperator, probe: str):
    """(U, s, Vh) with s descending; Hermitian probes go through eigh."""
    m = probe_matrix(t, probe)
    if t.selfadjoint and probe in ("F", "raw"):
        w, v = np.linalg.eigh(m)
        order = np.argsort(-np.abs(w), kind="stable")
        w, v = w[order], v[:, order]
        return v * np.where(w < 0, -1.0, 1.0), np.abs(w), v.conj().T
    return np.linalg.svd(m)


def _check_levels(fam: TruncatedFamily) -> None:
    if len(fam.levels) < 3:
        raise ValueError(f"family {fam.label!r} needs at least 3 levels, has {len(fam.levels)}")


def essential_profile(fam: TruncatedFamily, probe: str = "F") -> dict[int, np.ndarray]:
    """Ascending singular values of the probed operator at each level."""
    _check_levels(fam)
    return {n: np.sort(np.linalg.svd(probe_matrix(t, probe), compute_uv=False)) for n, t in fam}


def _persistent_rank(bases: list[np.ndarray], fam: TruncatedFamily, tol: float) -> int:
    """Smallest number of near-1 principal cosines between consecutive embedded null spaces."""
    rank = bases[0].shape[1]
    for (a, va), (b, vb) in zip(zip(fam.levels, bases), zip(fam.levels[1:], bases[1:])):
        if va.shape[1] == 0:
            return 0
        overlap = vb.conj().T @ (fam.embedding(a, b) @ va)
        cosines = np.linalg.svd(overlap, compute_uv=False)
        rank = min(rank, int(np.sum(cosines >= 1.0 - tol)))
    return rank


def fredholm_detect(
    fam: TruncatedFamily,
    delta_low: float = DELTA_LOW,
    delta_high: float = DELTA_HIGH,
    *,
    probe: str = "F",
    persist_tol: float = PERSIST_TOL,
) -> FredholmVerdict:
    """Fredholm verdict from a stable singular-value split of the probe (default F_t).

    The family is Fredholm iff some fixed r has, at every level, exactly r
    singular values below ``delta_low`` and the next one above ``delta_high``.
    """
    if not delta_low < delta_high:
        raise ValueError("delta_low must be below delta_high")
    _check_levels(fam)
    key = (probe, delta_low, delta_high, persist_tol)
    if key not in fam._verdicts:
        fam._verdicts[key] = _detect(fam, delta_low, delta_high, probe, persist_tol)
    return fam._verdicts[key]


def _detect(fam, delta_low, delta_high, probe, persist_tol) -> FredholmVerdict:
    table: dict[int, np.ndarray] = {}
    ker_bases, coker_bases = [], []
    counts, nexts = [], []
    problems = []
    for n, t in fam:
        u, s, vh = _singular_decomposition(t, probe)
        asc = s[::-1]
        table[n] = asc
        r = int(np.sum(asc < delta_low))
        counts.append(r)
        nxt = asc[r] if r < asc.size else 0.0
        nexts.append(nxt)
        if r == asc.size:
            problems.append(f"level {n}: every singular value is below {delta_low:g}")
        elif nxt <= delta_high:
            problems.append(f"level {n}: singular value {nxt:.3e} inside ({delta_low:g}, {delta_high:g}]")
        # columns of the r smallest singular directions
        ker_bases.append(vh[asc.size - r:].conj().T if r else np.zeros((asc.size, 0)))
        coker_bases.append(u[:, asc.size - r:] if r else np.zeros((asc.size, 0)))
    if len(set(counts)) > 1:
        problems.append(f"small singular count varies across levels: {counts}")
    if problems:
        msg = "; ".join(problems)
        log.debug("%s not Fredholm: %s", fam.label, msg)
        return FredholmVerdict(False, 0, 0, None, 0.0, table, probe, msg)
    ker = _persistent_rank(ker_bases, fam, persist_tol)
    coker = _persistent_rank(coker_bases, fam, persist_tol)
    index = ker - coker if fam.m == 1 else None
    return FredholmVerdict(True, ker, coker, index, float(min(nexts)), table, probe)


def cayley_criterion(fam: TruncatedFamily, delta_low: float = DELTA_LOW,
                     delta_high: float = DELTA_HIGH):
    """Detect Fredholmness through I + C_t and through F_t independently.

    Returns ``(lhs, rhs, agree)``.
    """
    if not fam.selfadjoint:
        raise ValueError(f"cayley_criterion: family {fam.label!r} is not selfadjoint")
    lhs = fredholm_detect(fam, delta_low, delta_high, probe="I+C")
    rhs = fredholm_detect(fam, delta_low, delta_high, probe="F")
    return lhs, rhs, lhs.is_fredholm == rhs.is_fredholm


def saturation_count(profile: Mapping[int, np.ndarray], tau: float) -> tuple[bool, list[int]]:
    """Numerical compactness: the count of singular values above tau stops growing.

    Compact iff that count agrees at the two top levels and is below the top
    level's dimension.
    """
    levels = sorted(profile)
    counts = [int(np.sum(profile[n] > tau)) for n in levels]
    top = profile[levels[-1]]
    return counts[-1] == counts[-2] and counts[-1] < top.size, counts


@dataclass(frozen=True)
class ResolventCheck:
    resolvent_compact: bool
    verdict: FredholmVerdict
    identity_residual: float
    counts: tuple[int, ...] = ()

    def __iter__(self):
        return iter((self.resolvent_compact, self.verdict))


def compact_resolvent_check(fam: TruncatedFamily, delta_low: float = DELTA_LOW,
                            delta_high: float = DELTA_HIGH, tau: float | None = None) -> ResolventCheck:
    """Compactness of (t + i)^-1 next to the Fredholm verdict.

    Also measures the per-level residual of I + C_t = 2I - 2i (t + i)^-1.
    """
    if not fam.selfadjoint:
        raise ValueError(f"compact_resolvent_check: family {fam.label!r} is not selfadjoint")
    _check_levels(fam)
    profile = {}
    residual = 0.0
    for n, t in fam:
        res = resolvent(t, -1)
        profile[n] = np.sort(np.linalg.svd(res, compute_uv=False))
        eye = np.eye(t.n)
        lhs = eye + cayley(t)
        residual = max(residual, float(np.linalg.norm(lhs - (2 * eye - 2j * res), 2)))
    compact, counts = saturation_count(profile, delta_high if tau is None else tau)
    verdict = fredholm_detect(fam, delta_low, delta_high)
    return ResolventCheck(compact, verdict, residual, tuple(counts))


def stability_radius(fam: TruncatedFamily, delta_low: float = DELTA_LOW,
                     delta_high: float = DELTA_HIGH) -> tuple[float, float]:
    """(eps_cayley, eps_bounded): half the essential gap of I + C_t, and a quarter of that."""
    base = fredholm_detect(fam, delta_low, delta_high)
    if not base.is_fredholm:
        raise ValueError(f"stability_radius: family {fam.label!r} is not Fredholm ({base.diagnostic})")
    cay = fredholm_detect(fam, delta_low, delta_high, probe="I+C")
    if not cay.is_fredholm:
        raise ValueError(f"stability_radius: I + C_t of {fam.label!r} shows no essential gap")
    eps_cayley = cay.essential_gap / 2.0
    return eps_cayley, eps_cayley / 4.0
