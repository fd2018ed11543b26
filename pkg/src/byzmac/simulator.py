"""Sequential-decoding simulation of Byzantine cq MAC episodes.

Each honest sender draws a message uniformly and a codeword permutation
uniformly from its code's family; the adversarial sender transmits a chosen
symbol string instead.  The receiver decodes senders one at a time in the
decode order: for each stage it undoes that sender's permutation, measures
with the sender's base POVM (Lueders update), and re-applies the permutation.

Exact error probabilities come from enumerating the branch tree; Monte
Carlo estimates sample it.  Trial ``t`` draws from
``np.random.default_rng([seed, t])`` so results do not depend on scheduling.
"""

from __future__ import annotations

import bisect
import csv
import hashlib
import io
import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.stats import binomtest

from . import qmatrix as qm
from .channel import CqMacChannel, ProductChannel, example_channel, example_povms
from .errors import DegenerateEnsemble, DimensionMismatch, LengthMismatch, SlotOutOfRange
from .states import DensityOperator, Povm

ABSTAIN = "abstain"
EXACT_PATH_LIMIT = 10_000
EXHAUSTIVE_LIMIT = 10_000
TOL_BRANCH = 1e-12


# ------------------------------------------------------------ codes

@dataclass(frozen=True, eq=False)
class RandomCode:
    """Permutation random code for one sender.

    ``codewords[m]`` is the base codeword of message ``m``.  Under common
    randomness ``gamma`` the transmitted string is
    ``x[pos] = codewords[m][gamma[pos]]`` and the receiver measures with the
    base POVM after undoing the permutation.
    """

    sender: int
    codewords: Mapping
    permutations: tuple
    base_povm: Povm

    def __post_init__(self) -> None:
        words = {m: tuple(w) for m, w in self.codewords.items()}
        if not words:
            raise ValueError("a code needs at least one message")
        n = len(next(iter(words.values())))
        if any(len(w) != n for w in words.values()):
            raise LengthMismatch("all codewords must have the same length")
        perms = tuple(tuple(int(i) for i in p) for p in (self.permutations or [tuple(range(n))]))
        for p in perms:
            if sorted(p) != list(range(n)):
                raise ValueError(f"{p} is not a permutation of range({n})")
        if self.base_povm.completeness_error() > 1e-9:
            raise ValueError("base POVM is not complete")
        object.__setattr__(self, "codewords", words)
        object.__setattr__(self, "permutations", perms)

    @property
    def n(self) -> int:
        return len(next(iter(self.codewords.values())))

    @property
    def messages(self) -> tuple:
        return tuple(self.codewords)

    def transmit(self, message: Hashable, gamma: int) -> tuple:
        word = self.codewords[message]
        return tuple(word[i] for i in self.permutations[gamma])


def _inverse(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for pos, i in enumerate(perm):
        inv[i] = pos
    return inv


# ------------------------------------------------------------ adversaries

@dataclass(frozen=True)
class Honest:
    """The slot behaves honestly; ``message_probs`` defaults to uniform."""

    message_probs: tuple | None = None
    name = "honest"


@dataclass(frozen=True)
class FixedSequence:
    sequence: tuple
    name = "fixed"


@dataclass(frozen=True)
class WorstCaseSearch:
    """Resolve to the worst sequence found by :func:`worst_case_adversary`."""

    budget: int = 1000
    gamma_aware: bool = False
    name = "worst"


AdversaryStrategy = Union[Honest, FixedSequence, WorstCaseSearch]


@dataclass(frozen=True, eq=False)
class Setup:
    """Everything that defines an episode distribution.

    ``codes`` holds a code for every sender (the adversary's code is still
    used by the receiver, who does not know which sender misbehaves).
    """

    channel: CqMacChannel
    codes: Mapping[int, RandomCode]
    order: tuple
    adversary: tuple | None = None

    def __post_init__(self) -> None:
        k = self.channel.k
        order = tuple(self.order)
        if sorted(order) != list(range(k)):
            raise SlotOutOfRange(f"decode order {order} is not a permutation of {k} senders")
        if set(self.codes) != set(range(k)):
            raise SlotOutOfRange("a code is required for every sender")
        ns = {c.n for c in self.codes.values()}
        if len(ns) != 1:
            raise LengthMismatch(f"codes have different block lengths {sorted(ns)}")
        pc = ProductChannel(self.channel, ns.pop())
        for slot, code in self.codes.items():
            if code.base_povm.dim != pc.out_dim:
                raise DimensionMismatch(f"POVM of sender {slot} has dim {code.base_povm.dim}, expected {pc.out_dim}")
            for w in code.codewords.values():
                for s in w:
                    self.channel.symbol_index(slot, s)
        adv = self.adversary
        if adv is not None:
            slot, strat = adv
            self.channel._check_slot(slot)
            if isinstance(strat, FixedSequence):
                if len(strat.sequence) != pc.n:
                    raise LengthMismatch(f"adversary sequence must have length {pc.n}")
                for s in strat.sequence:
                    self.channel.symbol_index(slot, s)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "product", pc)

    @property
    def n(self) -> int:
        return self.product.n

    @property
    def adversary_slot(self) -> int | None:
        if self.adversary is None or isinstance(self.adversary[1], Honest):
            return None
        return self.adversary[0]

    @property
    def honest_slots(self) -> tuple:
        return tuple(s for s in self.order if s != self.adversary_slot)

    def with_adversary(self, slot: int | None, strategy: AdversaryStrategy | None = None) -> Setup:
        adv = None if slot is None else (slot, strategy)
        return Setup(self.channel, self.codes, self.order, adv)

    def message_probs(self, slot: int) -> np.ndarray:
        msgs = self.codes[slot].messages
        if self.adversary is not None and self.adversary[0] == slot and isinstance(self.adversary[1], Honest):
            mp = self.adversary[1].message_probs
            if mp is not None:
                return np.asarray(mp, dtype=float)
        return np.full(len(msgs), 1.0 / len(msgs))


# ------------------------------------------------------------ decoding kernel

class _Decoder:
    """Stage-by-stage Lueders measurement with memoized branches."""

    def __init__(self, setup: Setup):
        self.setup = setup
        self.d = setup.channel.out_dim
        self.n = setup.n
        self._cache: dict = {}
        self._msg_cum: dict = {}

    def message_cum(self, slot: int) -> list[float]:
        if slot not in self._msg_cum:
            self._msg_cum[slot] = np.cumsum(self.setup.message_probs(slot)).tolist()
        return self._msg_cum[slot]

    def initial_state(self, inputs: tuple) -> np.ndarray:
        return self.setup.product.apply_matrix(inputs)

    def stage(self, rho: np.ndarray, slot: int, gamma: int) -> list[tuple[float, np.ndarray | None]]:
        """Probabilities and normalized posteriors for every outcome of ``slot``'s stage."""
        code = self.setup.codes[slot]
        perm = code.permutations[gamma]
        identity = list(perm) == list(range(self.n))
        base = rho if identity else qm.permute_factors(rho, self.d, self.n, _inverse(perm))
        out = []
        for e, s in zip(code.base_povm.elements, code.base_povm.sqrt_elements):
            p = float(np.real(np.vdot(e.conj().T, base)))
            if p <= TOL_BRANCH:
                out.append((max(p, 0.0), None))
                continue
            post = s @ base @ s / p
            if not identity:
                post = qm.permute_factors(post, self.d, self.n, perm)
            out.append((p, post))
        return out

    def branches(self, inputs: tuple, gammas: tuple, prefix: tuple) -> tuple:
        """Outcome probabilities and posteriors after the outcomes in ``prefix``."""
        key = (inputs, gammas, prefix)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if prefix:
            probs, posts, _, _ = self.branches(inputs, gammas, prefix[:-1])
            rho = posts[prefix[-1]]
        else:
            rho = self.initial_state(inputs)
        slot = self.setup.order[len(prefix)]
        res = self.stage(rho, slot, gammas[slot])
        probs = np.array([p for p, _ in res])
        posts = [post for _, post in res]
        hashes = [None if post is None else _state_hash(post) for post in posts]
        value = (probs, posts, hashes, np.cumsum(probs).tolist())
        self._cache[key] = value
        return value

    def leaves(self, inputs: tuple, gammas: tuple) -> list[tuple[float, tuple]]:
        """Exact branch tree: ``(path probability, outcome indices per stage)``."""
        out = []
        k = len(self.setup.order)

        def rec(prefix, weight):
            probs, posts, _, _ = self.branches(inputs, gammas, prefix)
            for idx, p in enumerate(probs):
                if p <= TOL_BRANCH:
                    continue
                if len(prefix) + 1 == k:
                    out.append((weight * p, prefix + (idx,)))
                else:
                    rec(prefix + (idx,), weight * p)

        rec((), 1.0)
        return out


def _state_hash(m: np.ndarray) -> str:
    r = np.round(np.asarray(m), 10) + 0.0  # drop negative zeros
    return hashlib.sha256(np.ascontiguousarray(r).tobytes()).hexdigest()[:16]


# ------------------------------------------------------------ episodes

@dataclass(frozen=True)
class StageRecord:
    sender: int
    gamma: int
    outcome: Hashable
    prob: float
    posterior_hash: str | None


@dataclass(frozen=True)
class EpisodeTranscript:
    trial: int
    decode_order: tuple
    adversary_slot: int | None
    adversary_sequence: tuple | None
    sent: dict
    stages: tuple
    correct: dict

    def to_json(self) -> str:
        return json.dumps({
            "trial": self.trial,
            "decode_order": [s + 1 for s in self.decode_order],
            "adversary_slot": None if self.adversary_slot is None else self.adversary_slot + 1,
            "adversary_sequence": None if self.adversary_sequence is None else list(self.adversary_sequence),
            "sent": {str(s + 1): m for s, m in self.sent.items()},
            "stages": [
                {"sender": r.sender + 1, "gamma": r.gamma, "outcome": r.outcome,
                 "prob": r.prob, "posterior_hash": r.posterior_hash}
                for r in self.stages
            ],
            "correct": {str(s + 1): c for s, c in self.correct.items()},
        }, sort_keys=True)


def _resolve_sequence(setup: Setup, gammas: tuple, plan) -> tuple | None:
    slot = setup.adversary_slot
    if slot is None:
        return None
    strat = setup.adversary[1]
    if isinstance(strat, FixedSequence):
        return tuple(strat.sequence)
    if plan is None:
        raise ValueError("WorstCaseSearch adversary needs a resolved plan")
    return plan.get(gammas, plan.get(None))


def _pick(cum: list[float], u: float) -> int:
    return min(bisect.bisect_right(cum, u * cum[-1]), len(cum) - 1)


def _episode(setup: Setup, dec: _Decoder, trial: int, rng: np.random.Generator, plan=None) -> EpisodeTranscript:
    # one uniform per gamma, per message and per stage, drawn up front
    k = setup.channel.k
    u = rng.random(3 * k).tolist()
    gammas = tuple(min(int(u[slot] * len(setup.codes[slot].permutations)), len(setup.codes[slot].permutations) - 1)
                   for slot in range(k))
    adv_seq = _resolve_sequence(setup, gammas, plan)
    sent = {}
    strings = []
    for slot in range(k):
        code = setup.codes[slot]
        if slot == setup.adversary_slot:
            strings.append(adv_seq)
            continue
        m = code.messages[_pick(dec.message_cum(slot), u[k + slot])]
        sent[slot] = m
        strings.append(code.transmit(m, gammas[slot]))
    inputs = tuple(strings)
    prefix = ()
    records = []
    correct = {}
    failed = False
    for stage, slot in enumerate(setup.order):
        labels = setup.codes[slot].base_povm.labels
        if failed:
            records.append(StageRecord(slot, gammas[slot], None, 0.0, None))
            if slot in sent:
                correct[slot] = False
            continue
        probs, posts, hashes, cum = dec.branches(inputs, gammas, prefix)
        idx = _pick(cum, u[2 * k + stage])
        p = float(probs[idx])
        if p <= TOL_BRANCH:
            failed = True
            records.append(StageRecord(slot, gammas[slot], None, p, None))
            if slot in sent:
                correct[slot] = False
            continue
        records.append(StageRecord(slot, gammas[slot], labels[idx], p, hashes[idx]))
        if slot in sent:
            correct[slot] = labels[idx] == sent[slot]
        prefix = prefix + (idx,)
    return EpisodeTranscript(trial, setup.order, setup.adversary_slot, adv_seq, sent, tuple(records), correct)


def run_episode(setup: Setup, rng: np.random.Generator, trial: int = 0) -> EpisodeTranscript:
    """Simulate one episode; a WorstCaseSearch adversary is resolved first."""
    plan = _plan_for(setup, rng)
    return _episode(setup, _Decoder(setup), trial, rng, plan)


# ------------------------------------------------------------ exact errors

def _gamma_profiles(setup: Setup) -> list[tuple]:
    return list(itertools.product(*(range(len(setup.codes[s].permutations)) for s in range(setup.channel.k))))


def path_count(setup: Setup) -> int:
    """Number of (messages, gammas, stage outcomes) leaves of the exact tree."""
    count = 1
    for slot in range(setup.channel.k):
        code = setup.codes[slot]
        count *= len(code.permutations) * (len(code.messages) if slot != setup.adversary_slot else 1)
        count *= len(code.base_povm)
    return count


def exact_errors_by_gamma(setup: Setup, adv_sequence: tuple | None = None,
                          decoder: _Decoder | None = None) -> dict:
    """``{gamma profile: {honest slot: error}}`` from the full branch tree."""
    dec = decoder or _Decoder(setup)
    honest = setup.honest_slots
    msg_lists = [setup.codes[s].messages for s in honest]
    msg_probs = [setup.message_probs(s) for s in honest]
    out = {}
    for gammas in _gamma_profiles(setup):
        success = dict.fromkeys(honest, 0.0)
        for combo in itertools.product(*(range(len(m)) for m in msg_lists)):
            weight = float(np.prod([mp[i] for mp, i in zip(msg_probs, combo)]))
            if weight == 0:
                continue
            sent = {s: msg_lists[h][i] for h, (s, i) in enumerate(zip(honest, combo))}
            strings = []
            for slot in range(setup.channel.k):
                if slot in sent:
                    strings.append(setup.codes[slot].transmit(sent[slot], gammas[slot]))
                else:
                    strings.append(tuple(adv_sequence))
            for prob, path in dec.leaves(tuple(strings), gammas):
                for stage, slot in enumerate(setup.order):
                    if slot in sent and setup.codes[slot].base_povm.labels[path[stage]] == sent[slot]:
                        success[slot] += weight * prob
        out[gammas] = {s: max(0.0, 1.0 - success[s]) for s in honest}
    return out


def exact_errors(setup: Setup, adv_sequence: tuple | None = None, decoder: _Decoder | None = None) -> dict:
    """Average decoding error per honest sender (uniform over messages and gammas)."""
    if setup.adversary_slot is not None and adv_sequence is None:
        strat = setup.adversary[1]
        if isinstance(strat, FixedSequence):
            adv_sequence = tuple(strat.sequence)
        else:
            raise ValueError("exact_errors needs a concrete adversary sequence")
    by_gamma = exact_errors_by_gamma(setup, adv_sequence, decoder)
    honest = setup.honest_slots
    return {s: float(np.mean([e[s] for e in by_gamma.values()])) for s in honest}


# ------------------------------------------------------------ worst case

@dataclass(frozen=True, eq=False)
class WorstCaseResult:
    """Per honest sender: the worst adversary sequence and the error it causes.

    With ``gamma_aware`` the adversary picks a sequence per realized gamma
    profile; ``plan`` maps profiles to the sequence maximizing the largest
    honest-sender error.
    """

    per_sender: dict
    worst_sequence: tuple | None
    verified: bool
    gamma_aware: bool
    candidates: int
    plan: dict = field(default_factory=dict)


def _adversary_candidates(setup: Setup, slot: int, rng: np.random.Generator, budget: int):
    alphabet = setup.channel.alphabets[slot]
    n = setup.n
    if len(alphabet) ** n <= EXHAUSTIVE_LIMIT:
        return list(itertools.product(alphabet, repeat=n)), True
    seen = []
    for _ in range(budget):
        seen.append(tuple(alphabet[i] for i in rng.integers(len(alphabet), size=n)))
    return list(dict.fromkeys(seen)), False


def worst_case_adversary(setup: Setup, rng: np.random.Generator | None = None, budget: int = 1000,
                         gamma_aware: bool = False, mc_trials: int = 2000) -> WorstCaseResult:
    """Maximize honest-sender error over adversary input sequences.

    Exhaustive over all sequences when there are at most 10^4 of them and
    the branch tree is tractable; otherwise a random search (Monte Carlo
    errors when the tree is too large) flagged as unverified.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    slot = setup.adversary_slot
    if slot is None:
        errs = exact_errors(setup) if path_count(setup) <= EXACT_PATH_LIMIT else None
        return WorstCaseResult({s: (None, errs[s] if errs else None) for s in setup.honest_slots},
                               None, errs is not None, gamma_aware, 0)
    probe = setup.with_adversary(slot, FixedSequence(tuple(setup.channel.alphabets[slot][0] for _ in range(setup.n))))
    cands, exhaustive = _adversary_candidates(setup, slot, rng, budget)
    tractable = path_count(probe) <= EXACT_PATH_LIMIT
    honest = probe.honest_slots
    dec = _Decoder(probe)
    table = {}
    for seq in cands:
        if tractable:
            table[seq] = exact_errors_by_gamma(probe, seq, dec)
        else:
            est = error_probability(probe.with_adversary(slot, FixedSequence(seq)), mc_trials,
                                    seed=int(rng.integers(2**31)))
            table[seq] = {None: {s: est[s].estimate for s in honest}}
    per_sender = {}
    plan = {}
    if gamma_aware and tractable:
        profiles = list(next(iter(table.values())))
        for g in profiles:
            plan[g] = max(cands, key=lambda q: max(table[q][g].values(), default=0.0))
        for s in honest:
            err = float(np.mean([max(table[q][g][s] for q in cands) for g in profiles]))
            per_sender[s] = (None, err)
        worst = None
    else:
        avg = {q: {s: float(np.mean([e[s] for e in table[q].values()])) for s in honest} for q in cands}
        for s in honest:
            q = max(cands, key=lambda c: avg[c][s])
            per_sender[s] = (q, avg[q][s])
        worst = max(cands, key=lambda c: max(avg[c].values(), default=0.0))
        plan[None] = worst
    return WorstCaseResult(per_sender, worst, exhaustive and tractable, gamma_aware, len(cands), plan)


def _plan_for(setup: Setup, rng: np.random.Generator):
    if setup.adversary_slot is None or not isinstance(setup.adversary[1], WorstCaseSearch):
        return None
    strat = setup.adversary[1]
    res = worst_case_adversary(setup, np.random.default_rng(rng.integers(2**31)), strat.budget, strat.gamma_aware)
    return res.plan


# ------------------------------------------------------------ Monte Carlo

@dataclass(frozen=True)
class ErrorEstimate:
    sender: int
    estimate: float
    ci_low: float
    ci_high: float
    trials: int
    errors: int
    exact: float | None

    def within_3sigma(self) -> bool | None:
        if self.exact is None:
            return None
        sigma = np.sqrt(self.exact * (1 - self.exact) / self.trials)
        return abs(self.estimate - self.exact) <= 3 * sigma + 1e-15


def worker_count() -> int:
    try:
        cap = int(os.environ.get("BYZMAC_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


def simulate(setup: Setup, trials: int, seed: int = 0) -> list[EpisodeTranscript]:
    """Run ``trials`` episodes; trial ``t`` uses ``default_rng([seed, t])``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    plan = _plan_for(setup, np.random.default_rng([seed, 2**32 - 1]))
    dec = _Decoder(setup)

    def run(t):
        return _episode(setup, dec, t, np.random.default_rng([seed, t]), plan)

    workers = worker_count()
    if workers == 1:
        return [run(t) for t in range(trials)]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(run, range(trials), chunksize=max(1, trials // (8 * workers))))


def error_probability(setup: Setup, trials: int, seed: int = 0,
                      transcripts: list[EpisodeTranscript] | None = None) -> dict:
    """Monte Carlo error per honest sender with a 95% Clopper-Pearson interval.

    The exact branch-tree value is attached when the tree has at most 10^4
    leaves.
    """
    eps = transcripts if transcripts is not None else simulate(setup, trials, seed)
    exact = None
    if path_count(setup) <= EXACT_PATH_LIMIT and not isinstance(
            setup.adversary[1] if setup.adversary else None, WorstCaseSearch):
        exact = exact_errors(setup)
    out = {}
    for s in setup.honest_slots:
        errs = sum(1 for e in eps if not e.correct.get(s, False))
        ci = binomtest(errs, len(eps)).proportion_ci(0.95, method="exact")
        out[s] = ErrorEstimate(s, errs / len(eps), float(ci.low), float(ci.high), len(eps), errs,
                               None if exact is None else exact[s])
    return out


CSV_COLUMNS = ("order", "adversary_slot", "strategy", "sender", "err_exact", "err_mc",
               "ci_low", "ci_high", "trials", "seed")


def summary_rows(setup: Setup, estimates: Mapping[int, ErrorEstimate], seed: int) -> list[dict]:
    strat = "none" if setup.adversary is None else setup.adversary[1].name
    adv = "" if setup.adversary is None else setup.adversary[0] + 1
    rows = []
    for s, est in estimates.items():
        rows.append({
            "order": ",".join(str(x + 1) for x in setup.order),
            "adversary_slot": adv,
            "strategy": strat,
            "sender": s + 1,
            "err_exact": "" if est.exact is None else repr(est.exact),
            "err_mc": repr(est.estimate),
            "ci_low": repr(est.ci_low),
            "ci_high": repr(est.ci_high),
            "trials": est.trials,
            "seed": seed,
        })
    return rows


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# ------------------------------------------------------------ decoders

def pgm_decoder(states: Sequence[DensityOperator], priors: Sequence[float] | None = None,
                labels: Sequence[Hashable] | None = None) -> Povm:
    """Square-root measurement for an ensemble, plus an explicit abstain outcome.

    ``D_m = S^{-1/2} p_m rho_m S^{-1/2}`` with ``S = sum_m p_m rho_m`` and the
    inverse root taken on the support of ``S``; the abstain element is
    ``I - sum_m D_m``, the projector onto the kernel of ``S``.
    """
    if not states:
        raise DegenerateEnsemble("empty ensemble")
    dim = states[0].dim
    priors = np.full(len(states), 1.0 / len(states)) if priors is None else np.asarray(priors, dtype=float)
    if priors.size != len(states) or np.any(priors < 0) or abs(priors.sum() - 1) > 1e-12:
        raise ValueError("priors must be a distribution over the states")
    avg = sum(p * s.mat for p, s in zip(priors, states))
    if qm.max_abs(avg) <= 1e-12:
        raise DegenerateEnsemble("average state is numerically zero")
    inv = qm.mat_inv_sqrt(avg)
    elems = [inv @ (p * s.mat) @ inv for p, s in zip(priors, states)]
    elems = [(e + e.conj().T) / 2 for e in elems]
    rest = np.eye(dim) - sum(elems)
    rest = (rest + rest.conj().T) / 2
    labels = tuple(range(len(states))) if labels is None else tuple(labels)
    return Povm(tuple(elems) + (rest,), labels + (ABSTAIN,))


def pgm_code(channel: CqMacChannel, sender: int, codewords: Mapping, permutations: Sequence | None = None,
             others: Mapping[int, Sequence[float]] | None = None) -> RandomCode:
    """Code whose base POVM is the PGM for the codeword states.

    Other senders' letters are mixed independently (uniform unless given).
    """
    words = {m: tuple(w) for m, w in codewords.items()}
    n = len(next(iter(words.values())))
    per_letter = {}
    arr = channel.tensor_array()
    for slot in reversed(range(channel.k)):
        if slot == sender:
            continue
        p = np.asarray((others or {}).get(slot, np.full(len(channel.alphabets[slot]), 1 / len(channel.alphabets[slot]))))
        arr = np.tensordot(p, np.moveaxis(arr, slot, 0), axes=(0, 0))
    for x in channel.alphabets[sender]:
        per_letter[x] = arr[channel.symbol_index(sender, x)]
    states = [DensityOperator(qm.tensor_all(per_letter[s] for s in w)) for w in words.values()]
    povm = pgm_decoder(states, labels=tuple(words))
    return RandomCode(sender, words, tuple(permutations or [tuple(range(n))]), povm)


# ------------------------------------------------------------ worked example

def example_setup(order: Sequence[int], adversary: tuple | None = None) -> Setup:
    """The two-sender worked example with one-letter codes ``m_i -> i``."""
    ch = example_channel()
    d1, d2 = example_povms()
    codes = {
        0: RandomCode(0, {0: (0,), 1: (1,)}, ((0,),), d1),
        1: RandomCode(1, {0: (0,), 1: (1,)}, ((0,),), d2),
    }
    return Setup(ch, codes, tuple(order), adversary)


@dataclass(frozen=True)
class DemoRow:
    case: str
    order: tuple
    adversary_slot: int | None
    adversary_symbol: Hashable | None
    errors: dict
    expected: dict
    stage_distributions: tuple = ()
    expected_stage_distributions: tuple = ()
    passed: bool = True


@dataclass(frozen=True)
class DemoReport:
    rows: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "rows": [
            {
                "case": r.case,
                "order": "->".join(str(s + 1) for s in r.order),
                "adversary_slot": None if r.adversary_slot is None else r.adversary_slot + 1,
                "adversary_symbol": r.adversary_symbol,
                "errors": {str(s + 1): e for s, e in r.errors.items()},
                "expected": {str(s + 1): e for s, e in r.expected.items()},
                "stage_distributions": [list(d) for d in r.stage_distributions],
                "passed": r.passed,
            }
            for r in self.rows
        ]}


def stage_distributions(setup: Setup, inputs: tuple) -> tuple:
    """Marginal outcome distribution of each stage for fixed (one-gamma) inputs."""
    dec = _Decoder(setup)
    gammas = tuple(0 for _ in range(setup.channel.k))
    margs = [np.zeros(len(setup.codes[s].base_povm)) for s in setup.order]
    for prob, path in dec.leaves(inputs, gammas):
        for stage, idx in enumerate(path):
            margs[stage][idx] += prob
    return tuple(tuple(float(x) for x in m) for m in margs)


def paper_example_demo(tol: float = 1e-12) -> DemoReport:
    """Exact error table for both decode orders and all trust configurations."""
    cases = [
        ("1a", (0, 1), 1, None, {0: 0.0}),
        ("1b", (0, 1), None, None, {0: 0.0, 1: 0.0}),
        ("1c", (0, 1), 0, None, {1: 0.0}),
        ("2a", (1, 0), 0, None, {1: 0.0}),
        ("2b", (1, 0), None, None, {0: 0.0, 1: 0.0}),
        ("2c", (1, 0), 1, 2, {0: 0.5}),
    ]
    rows = []
    for case, order, adv, symbol, expected in cases:
        setup = example_setup(order)
        stages, expected_stages = (), ()
        if adv is None:
            errors = exact_errors(setup)
        elif symbol is None:
            res = worst_case_adversary(setup.with_adversary(adv, WorstCaseSearch()))
            errors = {s: e for s, (_, e) in res.per_sender.items()}
        else:
            s = setup.with_adversary(adv, FixedSequence((symbol,)))
            errors = exact_errors(s)
            # sender 1 transmits m_0 against the jamming symbol
            stages = stage_distributions(s, ((0,), (symbol,)))
            expected_stages = ((0.5, 0.5), (0.5, 0.5))
        ok = all(abs(errors[s] - v) <= tol for s, v in expected.items())
        ok = ok and all(abs(a - b) <= tol for d, e in zip(stages, expected_stages) for a, b in zip(d, e))
        rows.append(DemoRow(case, order, adv, symbol, errors, expected, stages, expected_stages, ok))
    return DemoReport(tuple(rows))
