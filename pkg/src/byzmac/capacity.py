"""Max-min Holevo rate bounds and rate regions for Byzantine cq MACs.

For a target sender ``i`` and a candidate adversary ``j`` the bound is

    max_{p_i} min_{p_j} sum_b w_b chi(p_i; V_b(., p_j))

where each branch ``b`` fixes the symbols of the senders decoded before
``i`` (other than ``j``), ``w_b`` is the probability of that assignment, and
``V_b`` is the channel seen by sender ``i`` once the remaining honest senders
are mixed out and the relevant measurement disturbance is applied.  A region
takes, per sender, the minimum over all candidate adversaries.

``g(p, q)`` is concave in ``p`` and convex in ``q``, so the max-min equals the
min-max; the optimizer solves both sides and reports their difference as the
gap estimate.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from . import adversarial
from .channel import (
    CqMacChannel,
    DistLike,
    InputDistribution,
    _as_dist,
    avc_view,
    freeze_slots,
)
from .entropic import entropy_matrices
from .errors import KTooLarge, MissingStagePovm, SlotOutOfRange
from .states import Povm, QuantumChannel, induced_channel

MAX_K = 4


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of the coarse-to-fine simplex search.

    ``grid_resolution`` is the number of grid steps per simplex edge on the
    coarse pass; each refinement round halves the local step.
    """

    grid_resolution: int = 6
    refinement_rounds: int = 8
    tolerance: float = 1e-3
    max_evals: int = 2_000_000
    max_grid_points: int = 600
    dual_check: bool = True

    def __post_init__(self) -> None:
        for name in ("grid_resolution", "refinement_rounds", "max_evals", "max_grid_points"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


class BudgetExhaustedWarning(RuntimeWarning):
    pass


# ------------------------------------------------------------ simplex search

def simplex_grid(n: int, steps: int) -> np.ndarray:
    """All points of the (n-1)-simplex whose coordinates are multiples of 1/steps."""
    pts = []
    for bars in itertools.combinations(range(steps + n - 1), n - 1):
        edges = (-1,) + bars + (steps + n - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(n)])
    return np.array(pts, dtype=float) / steps


def _grid_size(n: int, steps: int) -> int:
    return math.comb(steps + n - 1, n - 1)


_MOVES: dict[int, np.ndarray] = {}


def _moves(n: int) -> np.ndarray:
    if n not in _MOVES:
        radius = 2 if n <= 4 else 1
        vs = [v for v in itertools.product(range(-radius, radius + 1), repeat=n - 1)]
        moves = []
        for v in vs:
            full = np.array(v + (-sum(v),), dtype=float)
            if np.any(full) and np.max(np.abs(full)) <= radius:
                moves.append(full)
        _MOVES[n] = np.array(moves)
    return _MOVES[n]


class _Counter:
    def __init__(self, budget: int):
        self.evals = 0
        self.budget = budget

    @property
    def exhausted(self) -> bool:
        return self.evals >= self.budget


def _search(f: Callable[[np.ndarray], float], n: int, cfg: OptimizerConfig, maximize: bool,
            counter: _Counter) -> tuple[np.ndarray, float]:
    """Deterministic coarse grid followed by shrinking-step pattern search."""
    if n == 1:
        counter.evals += 1
        return np.ones(1), f(np.ones(1))
    sign = 1.0 if maximize else -1.0
    steps = cfg.grid_resolution
    while steps > 1 and _grid_size(n, steps) > cfg.max_grid_points:
        steps -= 1
    best_p, best_v = None, -math.inf
    for p in simplex_grid(n, steps):
        v = sign * f(p)
        counter.evals += 1
        if v > best_v + 1e-15:
            best_p, best_v = p, v
    moves = _moves(n)
    h = 1.0 / steps
    for _ in range(cfg.refinement_rounds):
        h /= 2
        improved = True
        while improved and not counter.exhausted:
            improved = False
            cands = best_p + h * moves
            cands = cands[np.all(cands >= -1e-15, axis=1)]
            for c in np.clip(cands, 0.0, None):
                c = c / c.sum()
                v = sign * f(c)
                counter.evals += 1
                if v > best_v + 1e-13:
                    best_p, best_v, improved = c, v, True
        if counter.exhausted:
            break
    return best_p, sign * best_v


# ------------------------------------------------------------ objectives

@dataclass(frozen=True, eq=False)
class Branch:
    """One conditioning branch: weight and the ``(|X_i|, |X_j|, d, d)`` output tensor."""

    weight: float
    arr: np.ndarray


def _objective(branches: Sequence[Branch]) -> Callable[[np.ndarray, np.ndarray], float]:
    def g(p: np.ndarray, q: np.ndarray) -> float:
        total = 0.0
        for b in branches:
            mats = np.tensordot(q, b.arr, axes=(0, 1))
            avg = np.tensordot(p, mats, axes=(0, 0))
            total += b.weight * float(entropy_matrices(avg) - np.dot(p, entropy_matrices(mats)))
        return total
    return g


@dataclass(frozen=True, eq=False)
class MaxMinResult:
    rate: float
    p_star: InputDistribution
    q_star: InputDistribution
    honest: int
    adversary: int
    gap: float
    evals: int
    budget_exhausted: bool
    post_stages: tuple = ()
    conditioned_on: tuple = ()

    @property
    def converged(self) -> bool:
        return self.gap <= self.tolerance_used and not self.budget_exhausted

    tolerance_used: float = field(default=1e-3, repr=False)


def solve_maxmin(branches: Sequence[Branch], honest: int, adversary: int,
                 cfg: OptimizerConfig | None = None, post_stages: tuple = (),
                 conditioned_on: tuple = ()) -> MaxMinResult:
    """``max_p min_q sum_b w_b chi(p; sum_t q_t arr_b[:, t])`` over two simplices."""
    cfg = cfg or OptimizerConfig()
    nx, nt = branches[0].arr.shape[:2]
    g = _objective(branches)
    counter = _Counter(cfg.max_evals)

    def inner_min(p):
        return _search(lambda q: g(p, q), nt, cfg, maximize=False, counter=counter)

    p_star, value = _search(lambda p: inner_min(p)[1], nx, cfg, maximize=True, counter=counter)
    q_star, value = inner_min(p_star)
    gap = 0.0
    if cfg.dual_check:
        def inner_max(q):
            return _search(lambda p: g(p, q), nx, cfg, maximize=True, counter=counter)
        q_dual, upper = _search(lambda q: inner_max(q)[1], nt, cfg, maximize=False, counter=counter)
        gap = abs(upper - value)
    exhausted = counter.exhausted
    if exhausted:
        warnings.warn(f"optimizer budget of {cfg.max_evals} evaluations exhausted; best-so-far returned",
                      BudgetExhaustedWarning, stacklevel=2)
    return MaxMinResult(max(value, 0.0), InputDistribution(honest, p_star), InputDistribution(adversary, q_star),
                        honest, adversary, gap, counter.evals, exhausted, tuple(post_stages),
                        tuple(conditioned_on), cfg.tolerance)


def _pair_tensor(ch: CqMacChannel, honest: int, adversary: int,
                 frozen: Mapping[int, object]) -> np.ndarray:
    two = freeze_slots(ch, frozen)
    arr = two.tensor_array()
    if adversary < honest:
        arr = np.swapaxes(arr, 0, 1)
    return arr


def _apply_post(arr: np.ndarray, post: QuantumChannel | None) -> np.ndarray:
    if post is None:
        return arr
    out = np.zeros_like(arr)
    for k in post.kraus:
        out = out + k @ arr @ k.conj().T
    return out


def maxmin_rate(ch: CqMacChannel, honest: int, adversary: int,
                frozen: Mapping[int, object] | None = None,
                post: QuantumChannel | None = None,
                cfg: OptimizerConfig | None = None) -> MaxMinResult:
    """``max_{p_honest} min_{p_adversary} chi(p_honest; post o W(., p_adversary, frozen))``.

    ``frozen`` gives a symbol or a distribution for each remaining slot; slots
    left out are mixed uniformly.
    """
    ch._check_slot(honest)
    ch._check_slot(adversary)
    if honest == adversary:
        raise SlotOutOfRange("honest and adversary slots must differ")
    frozen = dict(frozen or {})
    for s in range(ch.k):
        if s not in (honest, adversary) and s not in frozen:
            frozen[s] = InputDistribution.uniform(s, len(ch.alphabets[s]))
    arr = _apply_post(_pair_tensor(ch, honest, adversary, frozen), post)
    return solve_maxmin([Branch(1.0, arr)], honest, adversary, cfg)


# ------------------------------------------------------------ regions

@dataclass(frozen=True, eq=False)
class RateRegion:
    """Per-sender rate bounds in bits per channel use.

    ``candidates[i]`` lists one :class:`MaxMinResult` per candidate adversary;
    ``bounds[i]`` is their minimum and ``binding[i]`` the adversary attaining it.
    """

    decode_order: tuple
    bounds: dict
    candidates: dict
    form: str = "derivation"

    @property
    def binding(self) -> dict:
        return {i: min(c, key=lambda r: r.rate).adversary for i, c in self.candidates.items() if c}

    @property
    def p_star(self) -> dict:
        return {i: min(c, key=lambda r: r.rate).p_star for i, c in self.candidates.items() if c}

    @property
    def q_star(self) -> dict:
        return {i: min(c, key=lambda r: r.rate).q_star for i, c in self.candidates.items() if c}

    @property
    def max_gap(self) -> float:
        return max((r.gap for c in self.candidates.values() for r in c), default=0.0)

    def as_dict(self) -> dict:
        return {
            "decode_order": [s + 1 for s in self.decode_order],
            "form": self.form,
            "bounds": {str(i + 1): r for i, r in sorted(self.bounds.items())},
            "candidates": {
                str(i + 1): [
                    {
                        "adversary": r.adversary + 1,
                        "rate": r.rate,
                        "p_star": r.p_star.probs.tolist(),
                        "q_star": r.q_star.probs.tolist(),
                        "post_stages": [s + 1 for s in r.post_stages],
                        "conditioned_on": [s + 1 for s in r.conditioned_on],
                        "gap": r.gap,
                        "evals": r.evals,
                    }
                    for r in c
                ]
                for i, c in sorted(self.candidates.items())
            },
        }


def _stage_map(order: Sequence[int], stage_povms) -> dict:
    if isinstance(stage_povms, Mapping):
        return dict(stage_povms)
    return {order[s]: p for s, p in enumerate(stage_povms) if p is not None}


def _default_dists(ch: CqMacChannel, dists: Mapping[int, DistLike] | None) -> dict:
    dists = dict(dists or {})
    return {s: _as_dist(ch, s, dists[s]) if s in dists else np.full(len(ch.alphabets[s]), 1.0 / len(ch.alphabets[s]))
            for s in range(ch.k)}


def conditional_branches(ch: CqMacChannel, honest: int, adversary: int, conditioned: Sequence[int],
                         dists: Mapping[int, np.ndarray], post: QuantumChannel | None) -> list[Branch]:
    """Branches over the symbols of ``conditioned`` senders, other senders mixed by ``dists``."""
    conditioned = tuple(conditioned)
    mixed = [s for s in range(ch.k) if s not in (honest, adversary) and s not in conditioned]
    branches = []
    for syms in itertools.product(*(range(len(ch.alphabets[s])) for s in conditioned)):
        weight = float(np.prod([dists[s][x] for s, x in zip(conditioned, syms)])) if conditioned else 1.0
        if weight <= 0:
            continue
        frozen = {s: ch.alphabets[s][x] for s, x in zip(conditioned, syms)}
        frozen.update({s: dists[s] for s in mixed})
        branches.append(Branch(weight, _apply_post(_pair_tensor(ch, honest, adversary, frozen), post)))
    return branches


def _chain(stages: Sequence[int], povms: Mapping[int, Povm]) -> QuantumChannel | None:
    out = None
    for s in stages:
        c = induced_channel(povms[s])
        out = c if out is None else out.then(c)
    return out


def region_2user(ch: CqMacChannel, decode_order: Sequence[int], decoder_povm_stage1: Povm,
                 cfg: OptimizerConfig | None = None) -> RateRegion:
    """Two-sender region: the first-decoded sender faces the raw channel, the
    second faces it after the first stage's measurement disturbance."""
    if ch.k != 2:
        raise SlotOutOfRange("region_2user needs a 2-sender channel")
    first, second = tuple(decode_order)
    r_first = maxmin_rate(ch, first, second, cfg=cfg)
    e1 = induced_channel(decoder_povm_stage1)
    r_second = solve_maxmin([Branch(1.0, _apply_post(_pair_tensor(ch, second, first, {}), e1))],
                            second, first, cfg, post_stages=(first,))
    return RateRegion((first, second), {first: r_first.rate, second: r_second.rate},
                      {first: [r_first], second: [r_second]})


def _check_order(ch: CqMacChannel, order: Sequence[int]) -> tuple:
    order = tuple(order)
    if sorted(order) != list(range(ch.k)):
        raise SlotOutOfRange(f"decode order {order} is not a permutation of the {ch.k} senders")
    return order


def region_3user(ch: CqMacChannel, decode_order: Sequence[int], stage_povms,
                 cfg: OptimizerConfig | None = None, form: str = "derivation",
                 dists: Mapping[int, DistLike] | None = None) -> RateRegion:
    """Three-sender region.

    ``form="derivation"`` lets the last sender see the disturbance of both
    earlier stages; ``form="statement"`` only that of the adversary's stage.
    ``dists`` fixes the input distributions of non-participating honest
    senders (uniform by default).
    """
    if ch.k != 3:
        raise SlotOutOfRange("region_3user needs a 3-sender channel")
    if form not in ("derivation", "statement"):
        raise ValueError(f"unknown form {form!r}")
    a, b, c = _check_order(ch, decode_order)
    povms = _stage_map((a, b, c), stage_povms)
    for s in (a, b):
        if s not in povms:
            raise MissingStagePovm(f"no stage POVM for sender {s}")
    d = _default_dists(ch, dists)

    def bound(honest, adv, conditioned, post_stages):
        post = _chain(post_stages, povms)
        branches = conditional_branches(ch, honest, adv, conditioned, d, post)
        return solve_maxmin(branches, honest, adv, cfg, post_stages=post_stages, conditioned_on=tuple(conditioned))

    cands = {
        a: [bound(a, b, (), ()), bound(a, c, (), ())],
        b: [bound(b, a, (), (a,)), bound(b, c, (a,), ())],
        c: [
            bound(c, a, (b,), (a, b) if form == "derivation" else (a,)),
            bound(c, b, (a,), (a, b) if form == "derivation" else (b,)),
        ],
    }
    return RateRegion((a, b, c), {i: min(r.rate for r in rs) for i, rs in cands.items()}, cands, form)


def region_kuser(ch: CqMacChannel, decode_order: Sequence[int], stage_povms,
                 cfg: OptimizerConfig | None = None, form: str = "derivation",
                 dists: Mapping[int, DistLike] | None = None) -> RateRegion:
    """General k-sender region (k <= 4).

    For sender ``i`` at decode position ``s`` and each other sender ``j``:
    if ``j`` is decoded earlier, condition on the other earlier senders and
    apply the disturbance of the earlier stages (all of them for
    ``form="derivation"``, only ``j``'s for ``form="statement"``); if ``j`` is
    decoded later, condition on all earlier senders with no disturbance.
    """
    if ch.k > MAX_K:
        raise KTooLarge(f"k={ch.k} exceeds the supported maximum of {MAX_K}")
    if form not in ("derivation", "statement"):
        raise ValueError(f"unknown form {form!r}")
    order = _check_order(ch, decode_order)
    povms = _stage_map(order, stage_povms)
    for s in order[:-1]:
        if s not in povms:
            raise MissingStagePovm(f"no stage POVM for sender {s}")
    if ch.k == 2:
        return region_2user(ch, order, povms[order[0]], cfg)
    d = _default_dists(ch, dists)
    cands = {}
    for pos, i in enumerate(order):
        earlier = order[:pos]
        rs = []
        for j in order:
            if j == i:
                continue
            if j in earlier:
                conditioned = tuple(h for h in earlier if h != j)
                post_stages = tuple(earlier) if form == "derivation" else (j,)
            else:
                conditioned = tuple(earlier)
                post_stages = ()
            post = _chain(post_stages, povms)
            branches = conditional_branches(ch, i, j, conditioned, d, post)
            rs.append(solve_maxmin(branches, i, j, cfg, post_stages=post_stages, conditioned_on=conditioned))
        cands[i] = rs
    return RateRegion(order, {i: min(r.rate for r in rs) for i, rs in cands.items()}, cands, form)


# ------------------------------------------------------------ corollary

@dataclass(frozen=True, eq=False)
class CorollaryResult:
    region: RateRegion | None
    sender1_symmetrizability: adversarial.SymmetrizabilityResult
    sender2_orthogonal: adversarial.OrthoResult
    diagnostic: str


def corollary_region(ch: CqMacChannel, cfg: OptimizerConfig | None = None,
                     search_budget: int = 256) -> CorollaryResult:
    """Region without the measurement penalty, for channels where it provably vanishes.

    Requires sender 1's AVC view to be non-symmetrizable and sender 2's to be
    certified not orthogonally symmetrizable; decode order is (sender 1,
    sender 2).  Otherwise no region is returned and the diagnostic names the
    failing hypothesis.
    """
    if ch.k != 2:
        raise SlotOutOfRange("corollary_region needs a 2-sender channel")
    sym = adversarial.check_symmetrizable(avc_view(ch, 0, 1))
    ortho = adversarial.check_orthogonally_symmetrizable(avc_view(ch, 1, 0), search_budget)
    failures = []
    if sym.symmetrizable:
        failures.append("slot 1: AVC view of sender 1 is symmetrizable")
    if ortho.verdict is not adversarial.OrthoVerdict.CERTIFIED_NOT:
        failures.append(f"slot 2: AVC view of sender 2 is not certified non-orthogonally-symmetrizable "
                        f"(verdict {ortho.verdict.value})")
    if failures:
        return CorollaryResult(None, sym, ortho, "; ".join(failures))
    r1 = maxmin_rate(ch, 0, 1, cfg=cfg)
    r2 = maxmin_rate(ch, 1, 0, cfg=cfg)
    region = RateRegion((0, 1), {0: r1.rate, 1: r2.rate}, {0: [r1], 1: [r2]}, form="corollary")
    return CorollaryResult(region, sym, ortho, "hypotheses hold")
