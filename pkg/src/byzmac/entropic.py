"""Entropies and Holevo-type quantities, all in bits."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import qmatrix as qm
from .channel import CqMacChannel, DistLike, _probs
from .errors import DimensionMismatch, WeightNotNormalized
from .states import DensityOperator

TOL_SUPPORT_SIGMA = 1e-10


def entropy_of_spectrum(w: np.ndarray) -> np.ndarray:
    """``-sum w log2 w`` along the last axis, with 0 log 0 = 0 and clamping."""
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    logs = np.zeros_like(w)
    on = w > qm.TOL_SUPPORT
    logs[on] = np.log2(w[on])
    return -np.sum(w * logs, axis=-1)


def entropy_matrices(mats: np.ndarray) -> np.ndarray:
    """Von Neumann entropy of a stack of density matrices ``(..., d, d)``."""
    mats = np.asarray(mats)
    return entropy_of_spectrum(np.linalg.eigvalsh((mats + np.swapaxes(mats, -1, -2).conj()) / 2))


def holevo_arrays(p: np.ndarray, mats: np.ndarray) -> float:
    """Holevo quantity for weights ``p`` over states ``mats`` of shape ``(n, d, d)``.

    No validation; this is the inner loop of the capacity optimizer.
    """
    avg = np.tensordot(p, mats, axes=(0, 0))
    return float(entropy_matrices(avg) - np.dot(p, entropy_matrices(mats)))


def von_neumann_entropy(rho: DensityOperator) -> float:
    if not isinstance(rho, DensityOperator):
        rho = DensityOperator(rho)
    return float(entropy_of_spectrum(np.linalg.eigvalsh(rho.mat)))


def _single(ch: CqMacChannel, p: DistLike) -> tuple[np.ndarray, np.ndarray]:
    if ch.k != 1:
        raise DimensionMismatch(f"expected a single-sender channel, got k={ch.k}")
    probs = _probs(p)
    if probs.size != len(ch.alphabets[0]):
        raise DimensionMismatch(f"distribution has {probs.size} entries for {len(ch.alphabets[0])} symbols")
    return probs, np.array([s.mat for s in ch.states()])


def conditional_entropy(ch: CqMacChannel, p: DistLike) -> float:
    """``S(V|P) = sum_x P(x) S(V(x))``."""
    probs, mats = _single(ch, p)
    return float(np.dot(probs, entropy_matrices(mats)))


def relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Quantum relative entropy in bits; ``math.inf`` when supp(rho) is not in supp(sigma)."""
    if rho.dim != sigma.dim:
        raise DimensionMismatch("states of different dimension")
    w, v = qm.herm_eig(sigma.mat)
    kernel = v[:, w <= TOL_SUPPORT_SIGMA]
    if kernel.size:
        leak = float(np.real(np.trace(kernel.conj().T @ rho.mat @ kernel)))
        if leak > TOL_SUPPORT_SIGMA:
            return math.inf
    logs = np.zeros_like(w)
    on = w > TOL_SUPPORT_SIGMA
    logs[on] = np.log2(w[on])
    log_sigma = qm.spectral_apply(w, v, logs)
    val = np.real(np.trace(rho.mat @ (qm.mat_log2(rho.mat) - log_sigma)))
    return float(val)


def holevo(p: DistLike, ch: CqMacChannel) -> float:
    """``chi(P; V) = S(sum_x P(x) V(x)) - S(V|P)``."""
    probs, mats = _single(ch, p)
    return holevo_arrays(probs, mats)


def mutual_info(p: DistLike, ch: CqMacChannel) -> float:
    """``I(P; V) = sum_x P(x) D(V(x) || sum_x' P(x') V(x'))``.

    Evaluated through relative entropies so it can serve as an independent
    check of :func:`holevo`.
    """
    probs, mats = _single(ch, p)
    avg = DensityOperator(np.tensordot(probs, mats, axes=(0, 0)))
    total = 0.0
    for px, rho in zip(probs, ch.states()):
        if px > 0:
            total += px * relative_entropy(rho, avg)
    return float(total)


def conditional_holevo(p: DistLike, branches: Sequence[tuple[float, CqMacChannel]], tol: float = 1e-9) -> float:
    """Branch-weighted Holevo quantity ``sum_b w_b chi(p; V_b)``.

    Each branch is a single-sender channel over the same alphabet, e.g. the
    channel seen by one sender conditioned on the already decoded messages.
    """
    if not branches:
        raise WeightNotNormalized("at least one branch is required")
    weights = np.array([w for w, _ in branches], dtype=float)
    if np.any(weights < -tol) or abs(weights.sum() - 1.0) > tol:
        raise WeightNotNormalized(f"branch weights sum to {weights.sum():.12g}")
    return float(sum(w * holevo(p, ch) for w, ch in branches if w > 0))
