"""Shipped truncated families and the plain-text matrix interchange format.

Matrix file format: first line ``N m``, then N*N complex entries as
``re im`` pairs in row-major order, one entry per line, 17 significant digits.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np

from regfred.fredholm import TruncatedFamily
from regfred.matalg import adjoint, as_operator
from regfred.regop import RegularOperator, double

DEFAULT_LEVELS = (32, 64, 128, 256)

# diagonal profiles, as functions of k = 1..n
PROFILES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "k": lambda k: k.astype(float),
    "inv_k": lambda k: 1.0 / k,
    "alt_k": lambda k: np.where(k % 2 == 0, 1.0, -1.0) * k,
    "const": lambda k: np.ones(k.shape),
    "zero": lambda k: np.zeros(k.shape),
}


def diagonal(values: Callable[[np.ndarray], np.ndarray] | str = "k", levels=DEFAULT_LEVELS,
             label: str | None = None, *, shift: float = 0.0, scale: float = 1.0) -> TruncatedFamily:
    """diag(scale * f(k) + shift) for k = 1..n."""
    name = values if isinstance(values, str) else getattr(values, "__name__", "f")
    f = PROFILES[values] if isinstance(values, str) else values

    def gen(n):
        k = np.arange(1, n + 1)
        return RegularOperator(np.diag(scale * f(k) + shift).astype(np.complex128), True)

    if label is None:
        label = f"diag({name})" + (f"{shift:+g}" if shift else "")
    return TruncatedFamily(gen, levels, label, nested=True)


def shift(levels=DEFAULT_LEVELS, label: str = "shift") -> TruncatedFamily:
    """Truncated one-sided shift e_j -> e_{j+1}."""
    return TruncatedFamily(lambda n: np.eye(n, k=-1, dtype=np.complex128), levels, label, nested=True)


def banded(levels=DEFAULT_LEVELS, potential: Callable[[np.ndarray], np.ndarray] | None = None,
           label: str = "laplacian+V") -> TruncatedFamily:
    """Dirichlet discrete Laplacian (2 on the diagonal, -1 off it) plus a diagonal potential."""
    pot = potential or PROFILES["k"]

    def gen(n):
        k = np.arange(1, n + 1)
        lap = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
        return RegularOperator((lap + np.diag(pot(k))).astype(np.complex128), True)

    return TruncatedFamily(gen, levels, label, nested=True)


def doubled(fam: TruncatedFamily) -> TruncatedFamily:
    def embed(a, b):
        e = fam.embedding(a, b)
        out = np.zeros((2 * e.shape[0], 2 * e.shape[1]))
        out[: e.shape[0], : e.shape[1]] = e
        out[e.shape[0]:, e.shape[1]:] = e
        return out

    return TruncatedFamily(lambda n: double(fam.at(n)), fam.levels, f"double({fam.label})",
                           embed=embed, m=fam.m)


def direct_sum(f1: TruncatedFamily, f2: TruncatedFamily) -> TruncatedFamily:
    if f1.levels != f2.levels:
        raise ValueError("direct_sum needs matching levels")

    def gen(n):
        a, b = f1.at(n).matrix, f2.at(n).matrix
        out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=np.complex128)
        out[: a.shape[0], : a.shape[0]] = a
        out[a.shape[0]:, a.shape[0]:] = b
        return out

    def embed(a, b):
        e1, e2 = f1.embedding(a, b), f2.embedding(a, b)
        out = np.zeros((e1.shape[0] + e2.shape[0], e1.shape[1] + e2.shape[1]))
        out[: e1.shape[0], : e1.shape[1]] = e1
        out[e1.shape[0]:, e1.shape[1]:] = e2
        return out

    return TruncatedFamily(gen, f1.levels, f"{f1.label}(+){f2.label}", embed=embed)


def phase_unitary(n: int) -> np.ndarray:
    """Diagonal unitary exp(i*k) for k = 1..n; consistent across levels under zero padding."""
    return np.diag(np.exp(1j * np.arange(1, n + 1)))


def conjugated(fam: TruncatedFamily, unitary: Callable[[int], np.ndarray] = phase_unitary) -> TruncatedFamily:
    """The family U_n* t_n U_n."""
    def fn(n, t):
        u = unitary(t.n)
        return adjoint(u) @ t.matrix @ u

    return fam.derive(fn, f"U*{fam.label}U")


def block_tensor(fam: TruncatedFamily, m: int) -> TruncatedFamily:
    """t_n (x) I_m, a family over the coefficient algebra M_m(C)."""
    def embed(a, b):
        return np.kron(fam.embedding(a, b), np.eye(m))

    return TruncatedFamily(lambda n: np.kron(fam.at(n).matrix, np.eye(m)), fam.levels,
                           f"{fam.label}(x)M{m}", embed=embed, m=m)


def from_matrices(mats: dict[int, np.ndarray], label: str = "custom", m: int = 1) -> TruncatedFamily:
    mats = {int(n): as_operator(a) for n, a in mats.items()}
    return TruncatedFamily(lambda n: mats[n], sorted(mats), label, m=m)


# ---- matrix files -------------------------------------------------------

def write_matrix(path, a, m: int = 1) -> None:
    a = as_operator(a)
    n = a.shape[0]
    lines = [f"{n} {m}"]
    lines += [f"{z.real:.17g} {z.imag:.17g}" for z in a.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> tuple[np.ndarray, int]:
    """Parse a matrix file; returns ``(matrix, m)``."""
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing 'N m' header")
    try:
        n, m = int(tokens[0]), int(tokens[1])
        vals = [float(x) for x in tokens[2:]]
    except ValueError as exc:
        raise ValueError(f"{path}: malformed entry ({exc})") from None
    if n <= 0 or m <= 0 or n % m:
        raise ValueError(f"{path}: bad dimensions N={n}, m={m}")
    if len(vals) != 2 * n * n:
        raise ValueError(f"{path}: expected {n * n} complex entries for N={n}, found {len(vals) / 2:g}")
    arr = np.asarray(vals).reshape(n * n, 2)
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n), m


def from_matrix_files(paths, label: str = "custom") -> TruncatedFamily:
    mats, ms = {}, set()
    for p in paths:
        a, m = read_matrix(p)
        if a.shape[0] in mats:
            raise ValueError(f"{p}: duplicate level N={a.shape[0]}")
        mats[a.shape[0]] = a
        ms.add(m)
    if len(ms) > 1:
        raise ValueError(f"matrix files disagree on m: {sorted(ms)}")
    return from_matrices(mats, label, m=ms.pop() if ms else 1)

