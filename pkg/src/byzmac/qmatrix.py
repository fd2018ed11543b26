"""Dense complex-matrix kernel.

Every operator in the package (states, POVM elements, Kraus operators) is a
plain ``numpy.ndarray`` of dtype ``complex128``.  This module holds the few
primitives the rest of the package builds on: Hermitian eigendecomposition,
spectral matrix functions, Kronecker products and partial traces.

Logarithms are base 2 throughout.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionCapExceeded,
    DimensionMismatch,
    NegativeEigenvalue,
    NotHermitian,
    NotSquare,
)

TOL_HERM = 1e-10
TOL_NEG = 1e-10
TOL_SUPPORT = 1e-12
MAX_DIM = 2**16


def as_cmatrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _require_square(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise NotSquare(f"matrix of shape {a.shape} is not square")


def hermiticity_error(m) -> float:
    a = as_cmatrix(m)
    _require_square(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def require_hermitian(m, tol: float = TOL_HERM) -> np.ndarray:
    a = as_cmatrix(m)
    _require_square(a)
    err = hermiticity_error(a)
    if err > tol:
        raise NotHermitian(f"max |m - m^dagger| = {err:.3e} exceeds {tol:.0e}")
    return a


def herm_eig(m, tol: float = TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with real eigenvalues sorted in
    descending order and the eigenvectors as the columns of a unitary matrix,
    so that ``m == V @ diag(w) @ V^dagger``.
    """
    a = require_hermitian(m, tol)
    # eigh only reads one triangle; symmetrize so small asymmetry is averaged out
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    order = np.argsort(w, kind="stable")[::-1]
    return w[order], v[:, order]


def _psd_eig(m, tol_neg: float = TOL_NEG) -> tuple[np.ndarray, np.ndarray]:
    w, v = herm_eig(m)
    if w.size and w[-1] < -tol_neg:
        raise NegativeEigenvalue(f"eigenvalue {w[-1]:.3e} below -{tol_neg:.0e}")
    return np.clip(w, 0.0, None), v


def spectral_apply(w: np.ndarray, v: np.ndarray, values: np.ndarray) -> np.ndarray:
    return (v * values) @ v.conj().T


def mat_sqrt(m) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix."""
    w, v = _psd_eig(m)
    return spectral_apply(w, v, np.sqrt(w))


def mat_log2(m) -> np.ndarray:
    """Base-2 logarithm of a PSD matrix, restricted to its support.

    Eigenvalues at or below ``1e-12`` contribute zero (0 log 0 = 0).
    """
    w, v = _psd_eig(m)
    logs = np.zeros_like(w)
    on = w > TOL_SUPPORT
    logs[on] = np.log2(w[on])
    return spectral_apply(w, v, logs)


def mat_inv_sqrt(m, cutoff: float = TOL_SUPPORT) -> np.ndarray:
    """Pseudo-inverse square root on the support of a PSD matrix."""
    w, v = _psd_eig(m)
    vals = np.zeros_like(w)
    on = w > cutoff
    vals[on] = 1.0 / np.sqrt(w[on])
    return spectral_apply(w, v, vals)


def support_projector(m, cutoff: float = TOL_SUPPORT) -> np.ndarray:
    w, v = _psd_eig(m)
    return spectral_apply(w, v, (w > cutoff).astype(float))


def _check_dim(d: int) -> None:
    if d > MAX_DIM:
        raise DimensionCapExceeded(f"dimension {d} exceeds the cap of {MAX_DIM}")


def tensor(a, b) -> np.ndarray:
    a, b = as_cmatrix(a), as_cmatrix(b)
    _check_dim(a.shape[0] * b.shape[0])
    _check_dim(a.shape[1] * b.shape[1])
    return np.kron(a, b)


def tensor_all(mats: Iterable) -> np.ndarray:
    return reduce(tensor, mats)


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` gives the local dimensions in tensor order.  Kept subsystems stay
    in their original relative order.  Keeping nothing returns the 1x1 trace.
    """
    a = as_cmatrix(m)
    _require_square(a)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != a.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not multiply to {a.shape[0]}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatch(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = a.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # bring kept row axes, kept col axes, then traced row/col pairs last
    perm = keep + [n + k for k in keep] + traced + [n + i for i in traced]
    t = t.transpose(perm)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    dt = int(np.prod([dims[i] for i in traced])) if traced else 1
    t = t.reshape(dk, dk, dt, dt)
    return np.trace(t, axis1=2, axis2=3)


def permute_factors(m, local_dim: int, n: int, perm: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of an operator on ``(C^local_dim)^{otimes n}``.

    Factor ``pos`` of the result is factor ``perm[pos]`` of ``m``; for a
    product operator ``A_0 x ... x A_{n-1}`` the result is
    ``A_perm[0] x ... x A_perm[n-1]``.
    """
    a = as_cmatrix(m)
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of range({n})")
    if a.shape != (local_dim**n, local_dim**n):
        raise DimensionMismatch(f"shape {a.shape} is not ({local_dim}^{n})^2")
    t = a.reshape((local_dim,) * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(a.shape)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros((dim, 1), dtype=np.complex128)
    v[index, 0] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=np.complex128).reshape(-1, 1)
    return v @ v.conj().T


def max_abs(m) -> float:
    a = np.asarray(m)
    return float(np.max(np.abs(a))) if a.size else 0.0


def trace_norm(m) -> float:
    """Schatten-1 norm of a Hermitian matrix (sum of |eigenvalues|)."""
    w, _ = herm_eig(m, tol=1e-8)
    return float(np.sum(np.abs(w)))
