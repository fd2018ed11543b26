"""Density operators, POVMs, Lueders updates and measurement-induced channels."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Sequence

import numpy as np

from . import qmatrix as qm
from .errors import (
    DimensionMismatch,
    IncompletePovm,
    InvariantViolation,
    ZeroProbabilityBranch,
)

TOL_TRACE = 1e-9
TOL_COMPLETE = 1e-9
TOL_ZERO_PROB = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated quantum state: Hermitian, PSD and unit trace."""

    mat: np.ndarray

    def __post_init__(self) -> None:
        a = qm.as_cmatrix(self.mat)
        if a.shape[0] != a.shape[1]:
            raise InvariantViolation(f"state of shape {a.shape} is not square")
        herr = qm.hermiticity_error(a)
        if herr > qm.TOL_HERM:
            raise InvariantViolation(f"state is not Hermitian (error {herr:.2e})")
        tr = float(np.real(np.trace(a)))
        if abs(tr - 1.0) > TOL_TRACE:
            raise InvariantViolation(f"state has trace {tr:.12g}, expected 1")
        w = np.linalg.eigvalsh((a + a.conj().T) / 2)
        if w[0] < -qm.TOL_NEG:
            raise InvariantViolation(f"state has negative eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "mat", _frozen((a + a.conj().T) / 2))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def pure(cls, vec) -> DensityOperator:
        v = np.asarray(vec, dtype=np.complex128).reshape(-1)
        return cls(qm.projector(v / np.linalg.norm(v)))

    @classmethod
    def basis(cls, index: int, dim: int) -> DensityOperator:
        return cls(qm.projector(qm.ket(index, dim)))

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityOperator:
        return cls(np.eye(dim) / dim)

    @classmethod
    def from_unnormalized(cls, m) -> DensityOperator:
        a = qm.as_cmatrix(m)
        tr = float(np.real(np.trace(a)))
        if tr <= TOL_ZERO_PROB:
            raise ZeroProbabilityBranch(f"cannot normalize an operator of trace {tr:.3e}")
        return cls(a / tr)

    def __matmul__(self, other: DensityOperator) -> DensityOperator:
        """Tensor product of two states."""
        return DensityOperator(qm.tensor(self.mat, other.mat))

    def allclose(self, other: DensityOperator, atol: float = 1e-9) -> bool:
        return self.dim == other.dim and qm.max_abs(self.mat - other.mat) <= atol


def mix(weights: Sequence[float], states: Sequence[DensityOperator]) -> DensityOperator:
    """Convex combination of states."""
    if len(weights) != len(states) or not states:
        raise DimensionMismatch("weights and states must be non-empty and of equal length")
    acc = np.zeros_like(states[0].mat)
    for w, s in zip(weights, states):
        if s.dim != states[0].dim:
            raise DimensionMismatch("states of different dimensions cannot be mixed")
        if w:
            acc = acc + w * s.mat
    return DensityOperator(acc)


@dataclass(frozen=True, eq=False)
class Povm:
    """A complete measurement: PSD elements summing to the identity.

    ``labels`` name the outcomes (message identifiers for decoders); they
    default to ``0..len(elements)-1``.
    """

    elements: tuple
    labels: tuple = ()

    def __post_init__(self) -> None:
        elems = tuple(_frozen(qm.as_cmatrix(e)) for e in self.elements)
        if not elems:
            raise IncompletePovm("a POVM needs at least one element")
        dim = elems[0].shape[0]
        for i, e in enumerate(elems):
            if e.shape != (dim, dim):
                raise DimensionMismatch(f"element {i} has shape {e.shape}, expected {(dim, dim)}")
            if qm.hermiticity_error(e) > qm.TOL_HERM:
                raise InvariantViolation(f"element {i} is not Hermitian")
            w = np.linalg.eigvalsh((e + e.conj().T) / 2)
            if w[0] < -qm.TOL_NEG:
                raise InvariantViolation(f"element {i} has negative eigenvalue {w[0]:.3e}")
        gap = qm.max_abs(sum(elems) - np.eye(dim))
        if gap > TOL_COMPLETE:
            raise IncompletePovm(f"elements sum to identity only within {gap:.3e}")
        labels = tuple(self.labels) if self.labels else tuple(range(len(elems)))
        if len(labels) != len(elems) or len(set(labels)) != len(labels):
            raise ValueError("labels must be unique and match the number of elements")
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    def element(self, label: Hashable) -> np.ndarray:
        return self.elements[self.labels.index(label)]

    @cached_property
    def sqrt_elements(self) -> tuple:
        return tuple(_frozen(qm.mat_sqrt(e)) for e in self.elements)

    def completeness_error(self) -> float:
        return qm.max_abs(sum(self.elements) - np.eye(self.dim))

    def conjugated(self, u: np.ndarray, labels: Sequence | None = None) -> Povm:
        """The POVM ``{u D u^dagger}``; ``u`` must be unitary."""
        return Povm(tuple(u @ e @ u.conj().T for e in self.elements), tuple(labels or self.labels))


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Trace-preserving map ``rho -> sum_i K_i rho K_i^dagger``."""

    kraus: tuple

    def __post_init__(self) -> None:
        ks = tuple(_frozen(qm.as_cmatrix(k)) for k in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        d_in = ks[0].shape[1]
        if any(k.shape[1] != d_in or k.shape[0] != ks[0].shape[0] for k in ks):
            raise DimensionMismatch("Kraus operators have inconsistent shapes")
        gap = qm.max_abs(sum(k.conj().T @ k for k in ks) - np.eye(d_in))
        if gap > TOL_COMPLETE:
            raise InvariantViolation(f"channel is not trace preserving (error {gap:.3e})")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    @classmethod
    def identity(cls, dim: int) -> QuantumChannel:
        return cls((np.eye(dim),))

    def apply_matrix(self, m) -> np.ndarray:
        a = qm.as_cmatrix(m)
        if a.shape != (self.dim_in, self.dim_in):
            raise DimensionMismatch(f"channel input dim {self.dim_in}, got {a.shape}")
        return sum(k @ a @ k.conj().T for k in self.kraus)

    def __call__(self, rho: DensityOperator) -> DensityOperator:
        return DensityOperator(self.apply_matrix(rho.mat))

    def then(self, other: QuantumChannel) -> QuantumChannel:
        """Sequential composition: apply ``self`` first, then ``other``."""
        if other.dim_in != self.dim_out:
            raise DimensionMismatch("channel dimensions do not chain")
        return QuantumChannel(tuple(b @ a for b in other.kraus for a in self.kraus))


def _check_dims(op_dim: int, rho: DensityOperator) -> None:
    if op_dim != rho.dim:
        raise DimensionMismatch(f"operator dim {op_dim} does not match state dim {rho.dim}")


def outcome_probs(p: Povm, rho: DensityOperator) -> np.ndarray:
    """Born-rule probabilities ``tr(D_m rho)`` for each element, in label order."""
    _check_dims(p.dim, rho)
    probs = np.array([np.real(np.vdot(e.conj().T, rho.mat)) for e in p.elements])
    probs[(probs < 0) & (probs >= -TOL_ZERO_PROB)] = 0.0
    return probs


def lueders_branch(d, rho: DensityOperator, sqrt_d: np.ndarray | None = None) -> tuple[float, DensityOperator]:
    """Probability and Lueders posterior ``sqrt(d) rho sqrt(d) / tr(d rho)``.

    Raises ZeroProbabilityBranch when ``tr(d rho) <= 1e-12``.
    """
    d = qm.as_cmatrix(d)
    _check_dims(d.shape[0], rho)
    prob = float(np.real(np.vdot(d.conj().T, rho.mat)))
    if prob <= TOL_ZERO_PROB:
        raise ZeroProbabilityBranch(f"outcome probability {prob:.3e} is too small for a posterior")
    s = qm.mat_sqrt(d) if sqrt_d is None else sqrt_d
    return prob, DensityOperator.from_unnormalized(s @ rho.mat @ s)


def measure(p: Povm, rho: DensityOperator, rng: np.random.Generator) -> tuple[Hashable, DensityOperator]:
    """Sample one outcome of ``p`` on ``rho`` and return it with its posterior."""
    probs = outcome_probs(p, rho)
    idx = int(rng.choice(len(probs), p=probs / probs.sum()))
    _, post = lueders_branch(p.elements[idx], rho, p.sqrt_elements[idx])
    return p.labels[idx], post


def induced_channel(p: Povm) -> QuantumChannel:
    """The averaged post-measurement map ``rho -> sum_m sqrt(D_m) rho sqrt(D_m)``."""
    if p.completeness_error() > TOL_COMPLETE:
        raise IncompletePovm("induced channel requires a complete POVM")
    return QuantumChannel(p.sqrt_elements)


@dataclass(frozen=True)
class GentleCheck:
    prob: float
    trace_distance: float
    bound: float
    holds: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "holds", self.trace_distance <= self.bound + 1e-12)


def gentle_measurement_check(d, rho: DensityOperator) -> GentleCheck:
    """Compare the disturbance of outcome ``d`` with the gentle-measurement bound.

    The trace distance is ``0.5 * ||rho - post||_1`` and the bound is
    ``sqrt(8 (1 - p))`` with ``p = tr(d rho)``.
    """
    d = qm.as_cmatrix(d)
    w = np.linalg.eigvalsh((d + d.conj().T) / 2)
    if w[0] < -qm.TOL_NEG or w[-1] > 1 + qm.TOL_NEG:
        raise InvariantViolation("gentle measurement check needs 0 <= d <= I")
    prob, post = lueders_branch(d, rho)
    dist = 0.5 * qm.trace_norm(rho.mat - post.mat)
    return GentleCheck(prob, dist, float(np.sqrt(8.0 * max(0.0, 1.0 - prob))))
