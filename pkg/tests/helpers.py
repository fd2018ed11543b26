"""Random instance generators shared by the test modules."""

from __future__ import annotations

import itertools

import numpy as np

from byzmac.channel import AvcView, CqMacChannel
from byzmac.states import DensityOperator, Povm, QuantumChannel


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    g = ginibre(rng, d, d)
    return (g + g.conj().T) / 2


def random_psd(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    g = ginibre(rng, d, rank or d)
    return g @ g.conj().T


def random_density(rng: np.random.Generator, d: int, rank: int | None = None) -> DensityOperator:
    m = random_psd(rng, d, rank)
    return DensityOperator(m / np.trace(m).real)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(rng, d, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_single_channel(rng: np.random.Generator, nx: int, d: int) -> CqMacChannel:
    ranks = rng.integers(1, d + 1, size=nx)
    return CqMacChannel.single([random_density(rng, d, int(r)) for r in ranks])


def random_mac(rng: np.random.Generator, sizes, d: int) -> CqMacChannel:
    alphabets = [tuple(range(s)) for s in sizes]
    table = {key: random_density(rng, d, int(rng.integers(1, d + 1)))
             for key in itertools.product(*alphabets)}
    return CqMacChannel(alphabets, table)


def random_qchannel(rng: np.random.Generator, d_in: int, d_out: int, n_kraus: int) -> QuantumChannel:
    """Kraus operators cut from a random isometry (at least enough of them to be trace preserving)."""
    n_kraus = max(n_kraus, -(-d_in // d_out))
    q, _ = np.linalg.qr(ginibre(rng, d_out * n_kraus, d_in))
    return QuantumChannel(tuple(q[i * d_out:(i + 1) * d_out] for i in range(n_kraus)))


def random_povm(rng: np.random.Generator, d: int, m: int) -> Povm:
    raw = [random_psd(rng, d) for _ in range(m)]
    w, v = np.linalg.eigh(sum(raw))
    inv = (v / np.sqrt(w)) @ v.conj().T
    return Povm(tuple(inv @ a @ inv for a in raw))


def random_dist(rng: np.random.Generator, n: int) -> np.ndarray:
    p = rng.dirichlet(np.ones(n))
    return p / p.sum()


def planted_avc(rng: np.random.Generator, nx: int, n_extra: int, d: int) -> tuple[AvcView, np.ndarray]:
    """A symmetrizable AVC built around a planted tau.

    The jammer alphabet is the legit alphabet plus ``n_extra`` extra symbols.
    ``W(a, b)`` for legit ``b`` is symmetric in ``(a, b)`` and ``W(a, e)`` for
    extra ``e`` does not depend on ``a``.  Then
    ``tau(.|x) = lam * delta_x + (1 - lam) * mu`` on the extra symbols
    satisfies the symmetrizability equations exactly.
    """
    sym = {}
    for a in range(nx):
        for b in range(a, nx):
            sym[a, b] = sym[b, a] = random_density(rng, d).mat
    extra = [random_density(rng, d).mat for _ in range(n_extra)]
    arr = np.empty((nx, nx + n_extra, d, d), dtype=np.complex128)
    for a in range(nx):
        for b in range(nx):
            arr[a, b] = sym[a, b]
        for e in range(n_extra):
            arr[a, nx + e] = extra[e]
    lam = rng.uniform(0.05, 1.0)
    mu = random_dist(rng, n_extra) if n_extra else np.zeros(0)
    tau = np.zeros((nx, nx + n_extra))
    for x in range(nx):
        tau[x, x] = lam if n_extra else 1.0
        tau[x, nx:] = (1 - lam) * mu
    return AvcView.from_array(arr), tau


def symmetry_residual(arr: np.ndarray, tau: np.ndarray) -> float:
    """Max entry of ``sum_t tau(t|a) W(b,t) - tau(t|b) W(a,t)`` over pairs, by explicit loops."""
    nx, nt = tau.shape
    worst = 0.0
    for a in range(nx):
        for b in range(nx):
            lhs = sum(tau[a, t] * arr[b, t] for t in range(nt))
            rhs = sum(tau[b, t] * arr[a, t] for t in range(nt))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
