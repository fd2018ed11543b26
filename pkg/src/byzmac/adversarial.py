"""Symmetrizability and orthogonal symmetrizability of arbitrarily varying cq channels."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .channel import AvcView

EPS_SYM = 1e-8
TOL_OVERLAP = 1e-12
TOL_POSITIVE = 1e-10


@dataclass(frozen=True, eq=False)
class SymWitness:
    """``tau[i, j] = tau(state_set[j] | legit[i])`` and its max-abs equation residual."""

    tau: np.ndarray
    slack: float

    def as_dict(self, avc: AvcView) -> dict:
        return {x: dict(zip(avc.state_set, map(float, row))) for x, row in zip(avc.legit, self.tau)}


@dataclass(frozen=True, eq=False)
class SymmetrizabilityResult:
    symmetrizable: bool
    lp_optimum: float
    witness: SymWitness

    @property
    def slack(self) -> float:
        """Residual of the returned tau, an upper bound on the true optimum."""
        return self.witness.slack


def _symmetry_residual(arr: np.ndarray, tau: np.ndarray) -> float:
    # mixed[a, b] = sum_t tau(t|a) W(b, t)
    mixed = np.einsum("at,btij->abij", tau, arr)
    diff = mixed - np.swapaxes(mixed, 0, 1)
    return float(max(np.max(np.abs(diff.real)), np.max(np.abs(diff.imag)))) if diff.size else 0.0


def check_symmetrizable(avc: AvcView, eps: float = EPS_SYM) -> SymmetrizabilityResult:
    """Decide symmetrizability by minimizing the worst entry violation over tau.

    LP variables are ``tau(t|x) >= 0`` with unit row sums plus a slack ``s``;
    for every pair ``x < x'`` and every upper-triangular entry, the real and
    imaginary parts of ``sum_t tau(t|x) W(x',t) - tau(t|x') W(x,t)`` are
    bounded by ``+-s``.  The channel is symmetrizable iff the optimum is at
    most ``eps``.
    """
    arr = avc.as_array()
    nx, nt, d = arr.shape[0], arr.shape[1], arr.shape[2]
    nvar = nx * nt + 1
    iu = np.triu_indices(d)
    rows = []
    for a, b in itertools.combinations(range(nx), 2):
        # coefficient of tau(t|a) is W(b,t); of tau(t|b) is -W(a,t)
        block = np.zeros((len(iu[0]), nvar), dtype=np.complex128)
        block[:, a * nt:(a + 1) * nt] = arr[b][:, iu[0], iu[1]].T
        block[:, b * nt:(b + 1) * nt] = -arr[a][:, iu[0], iu[1]].T
        for part in (block.real, block.imag):
            keep = np.any(np.abs(part) > 0, axis=1)
            rows.append(part[keep])
    if rows and sum(r.shape[0] for r in rows):
        coef = np.vstack(rows)
        a_ub = np.vstack([np.hstack([coef[:, :-1], -np.ones((coef.shape[0], 1))]),
                          np.hstack([-coef[:, :-1], -np.ones((coef.shape[0], 1))])])
        b_ub = np.zeros(a_ub.shape[0])
    else:
        a_ub, b_ub = None, None
    a_eq = np.zeros((nx, nvar))
    for x in range(nx):
        a_eq[x, x * nt:(x + 1) * nt] = 1.0
    c = np.zeros(nvar)
    c[-1] = 1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=np.ones(nx),
                  bounds=[(0, None)] * nvar, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if not res.success:
        raise RuntimeError(f"LP solver failed: {res.message}")
    tau = np.clip(res.x[:-1].reshape(nx, nt), 0.0, None)
    tau /= tau.sum(axis=1, keepdims=True)
    witness = SymWitness(tau, _symmetry_residual(arr, tau))
    optimum = max(float(res.fun), 0.0)
    return SymmetrizabilityResult(optimum <= eps, optimum, witness)


class OrthoVerdict(enum.Enum):
    WITNESS = "witness"
    CERTIFIED_NOT = "certified_not"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class OrthoResult:
    verdict: OrthoVerdict
    tau: np.ndarray | None = None
    blocking_pair: tuple | None = None
    min_trace: float | None = None
    candidates_tried: int = 0


def cross_overlaps(avc: AvcView) -> np.ndarray:
    """``O[a, b, t, u] = tr(W(b, t) W(a, u))``."""
    arr = avc.as_array()
    return np.real(np.einsum("btij,auji->abtu", arr, arr))


def pair_traces(avc: AvcView, tau: np.ndarray) -> np.ndarray:
    """``T[a, b] = tr((sum_t tau(t|a) W(b,t)) (sum_u tau(u|b) W(a,u)))``."""
    return np.einsum("abtu,at,bu->ab", cross_overlaps(avc), tau, tau)


def check_orthogonally_symmetrizable(avc: AvcView, search_budget: int = 256,
                                     rng: np.random.Generator | None = None) -> OrthoResult:
    """Look for a tau making every distinct-pair trace strictly positive.

    A pair whose cross overlaps all vanish certifies that no tau exists.
    Otherwise the uniform tau is tried first, then random Dirichlet draws,
    up to ``search_budget`` candidates in total.
    """
    nx, nt = len(avc.legit), len(avc.state_set)
    over = cross_overlaps(avc)
    for a, b in itertools.combinations(range(nx), 2):
        if np.all(over[a, b] <= TOL_OVERLAP):
            return OrthoResult(OrthoVerdict.CERTIFIED_NOT, blocking_pair=(avc.legit[a], avc.legit[b]))
    off = ~np.eye(nx, dtype=bool)
    rng = np.random.default_rng(0) if rng is None else rng
    best = None
    for i in range(search_budget):
        tau = np.full((nx, nt), 1.0 / nt) if i == 0 else rng.dirichlet(np.ones(nt), size=nx)
        traces = np.einsum("abtu,at,bu->ab", over, tau, tau)
        worst = float(np.min(traces[off])) if nx > 1 else np.inf
        if best is None or worst > best:
            best = worst
        if worst > TOL_POSITIVE:
            return OrthoResult(OrthoVerdict.WITNESS, tau=tau, min_trace=worst, candidates_tried=i + 1)
    return OrthoResult(OrthoVerdict.UNKNOWN, min_trace=best, candidates_tried=search_budget)
