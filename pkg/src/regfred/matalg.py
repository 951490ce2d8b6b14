"""Dense complex matrix algebra and Hilbert-module scaffolding.

An *operator* is a square complex ndarray. A *module element* over the
coefficient algebra M_m(C) is an N x m array holding k = N/m stacked m x m
blocks; the Hilbert-space case is m = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

HERMITIAN_RTOL = 1e-10


def as_operator(a, block_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Coerce ``a`` to a square complex128 matrix, checking the optional block layout."""
    arr = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"operator must be square, got shape {arr.shape}")
    if block_shape is not None:
        k, m = block_shape
        if k * m != arr.shape[0]:
            raise ValueError(f"block shape {block_shape} does not tile N={arr.shape[0]}")
    return arr


def adjoint(a) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def op_norm(a, hermitian: bool = False) -> float:
    """Operator norm: the largest singular value.

    ``hermitian=True`` promises a Hermitian argument and uses its spectrum.
    """
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    if hermitian:
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))
    return float(np.linalg.norm(a, 2))


def hermitian_defect(h) -> float:
    return op_norm(h - adjoint(h))


def is_hermitian(h, tol: float = HERMITIAN_RTOL) -> bool:
    """||h - h*|| <= tol * (1 + ||h||), with cheap Frobenius / max-entry bounds tried first."""
    h = np.asarray(h)
    diff = h - adjoint(h)
    fro = float(np.linalg.norm(diff))
    if fro <= tol * (1.0 + float(np.max(np.abs(h), initial=0.0))):
        return True
    return op_norm(diff) <= tol * (1.0 + op_norm(h))


def symmetrize(h, tol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Return (h + h*)/2, raising if h is further from Hermitian than tol*(1+||h||)."""
    h = as_operator(h)
    if not is_hermitian(h, tol):
        raise ValueError(f"matrix is not Hermitian (defect {hermitian_defect(h):.3e})")
    return 0.5 * (h + adjoint(h))


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, values=None) -> np.ndarray:
        vals = self.eigenvalues if values is None else values
        v = self.eigenvectors
        return (v * vals) @ adjoint(v)


def spectral(h) -> SpectralData:
    w, v = np.linalg.eigh(symmetrize(h))
    return SpectralData(w, v)


def herm_apply(h, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Functional calculus f(h) for Hermitian h.

    ``f`` is applied elementwise to the (ascending) eigenvalues; a non-finite
    value signals that f is undefined on the spectrum.
    """
    sd = spectral(h)
    with np.errstate(all="ignore"):
        fv = np.asarray(f(sd.eigenvalues))
    if fv.shape != sd.eigenvalues.shape:
        fv = np.broadcast_to(fv, sd.eigenvalues.shape)
    if not np.all(np.isfinite(fv)):
        bad = sd.eigenvalues[~np.isfinite(fv)]
        raise ValueError(f"function undefined at eigenvalue(s) {bad[:4]}")
    out = sd.reconstruct(fv)
    if np.isrealobj(fv):
        out = 0.5 * (out + adjoint(out))
    return out


def is_unitary(u, tol: float) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    u = np.asarray(u)
    eye = np.eye(u.shape[0])
    uh = adjoint(u)
    return op_norm(uh @ u - eye) <= tol and op_norm(u @ uh - eye) <= tol


def as_module_element(x, m: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[:, None]
    if m is not None and arr.shape[1] != m:
        raise ValueError(f"module element has {arr.shape[1]} columns, expected m={m}")
    if arr.shape[0] % arr.shape[1]:
        raise ValueError(f"N={arr.shape[0]} is not a multiple of m={arr.shape[1]}")
    return arr


def module_inner(x, y) -> np.ndarray:
    """The M_m(C)-valued inner product sum_i x_i* y_i over the k blocks."""
    x = as_module_element(x)
    y = as_module_element(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    # stacking the blocks turns the block sum into one matrix product
    return adjoint(x) @ y


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """Random Hermitian matrix with operator norm ``scale``."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = 0.5 * (z + adjoint(z))
    return h * (scale / op_norm(h, hermitian=True))


def random_complex(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return z * (scale / op_norm(z))
