"""Classical-quantum multiple-access channels.

Slots (senders) are 0-based in the library; the CLI numbers senders from 1.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Mapping, Sequence, Union

import numpy as np

from . import qmatrix as qm
from .errors import (
    DimensionCapExceeded,
    DimensionMismatch,
    DistributionError,
    InvariantViolation,
    LengthMismatch,
    ParseError,
    SlotOutOfRange,
    SymbolOutOfAlphabet,
)
from .states import DensityOperator, Povm, QuantumChannel

TOL_DIST = 1e-12


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """Probability vector over one slot's alphabet (in alphabet order)."""

    slot: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.size == 0 or np.any(~np.isfinite(p)):
            raise DistributionError("distribution must be a non-empty finite vector")
        if np.any(p < -TOL_DIST):
            raise DistributionError("distribution has negative entries")
        if abs(p.sum() - 1.0) > TOL_DIST:
            raise DistributionError(f"distribution not normalized (sums to {p.sum():.12g})")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, slot: int, size: int) -> InputDistribution:
        return cls(slot, np.full(size, 1.0 / size))

    @classmethod
    def point(cls, slot: int, size: int, index: int) -> InputDistribution:
        p = np.zeros(size)
        p[index] = 1.0
        return cls(slot, p)


DistLike = Union[InputDistribution, Sequence[float], np.ndarray]


def _probs(dist: DistLike) -> np.ndarray:
    if isinstance(dist, InputDistribution):
        return dist.probs
    return InputDistribution(-1, dist).probs


class CqMacChannel:
    """Map from k-tuples of classical symbols to density operators.

    Parameters
    ----------
    alphabets : sequence of sequences
        One finite symbol list per sender.
    table : mapping
        ``tuple(symbols) -> DensityOperator`` (or raw matrix); must be total.
    """

    def __init__(self, alphabets: Sequence[Sequence[Hashable]], table: Mapping):
        self.alphabets = tuple(tuple(a) for a in alphabets)
        if not self.alphabets or any(len(a) == 0 for a in self.alphabets):
            raise InvariantViolation("every sender needs a non-empty alphabet")
        if any(len(set(a)) != len(a) for a in self.alphabets):
            raise InvariantViolation("alphabet symbols must be unique")
        self._index = tuple({s: i for i, s in enumerate(a)} for a in self.alphabets)
        entries = {}
        out_dim = None
        for key in itertools.product(*self.alphabets):
            if key not in table:
                raise InvariantViolation(f"table not total: missing input {key}")
            v = table[key]
            try:
                rho = v if isinstance(v, DensityOperator) else DensityOperator(v)
            except InvariantViolation as exc:
                raise InvariantViolation(f"entry {key}: {exc}") from None
            if out_dim is None:
                out_dim = rho.dim
            elif rho.dim != out_dim:
                raise InvariantViolation(f"entry {key} has dim {rho.dim}, expected {out_dim}")
            entries[key] = rho
        if len(table) != len(entries):
            raise InvariantViolation("table has inputs outside the alphabets")
        self.table = entries
        self.out_dim = int(out_dim)

    @property
    def k(self) -> int:
        return len(self.alphabets)

    @classmethod
    def single(cls, states: Sequence[DensityOperator], alphabet: Sequence[Hashable] | None = None) -> CqMacChannel:
        """One-sender channel ``x -> states[x]``."""
        alphabet = tuple(range(len(states))) if alphabet is None else tuple(alphabet)
        return cls([alphabet], {(x,): s for x, s in zip(alphabet, states)})

    def _check_slot(self, slot: int) -> None:
        if not 0 <= slot < self.k:
            raise SlotOutOfRange(f"slot {slot} out of range for a {self.k}-sender channel")

    def symbol_index(self, slot: int, symbol: Hashable) -> int:
        self._check_slot(slot)
        try:
            return self._index[slot][symbol]
        except KeyError:
            raise SymbolOutOfAlphabet(f"symbol {symbol!r} not in alphabet of slot {slot}") from None

    def apply(self, inputs: Sequence[Hashable]) -> DensityOperator:
        inputs = tuple(inputs)
        if len(inputs) != self.k:
            raise SymbolOutOfAlphabet(f"expected {self.k} inputs, got {len(inputs)}")
        for slot, s in enumerate(inputs):
            self.symbol_index(slot, s)
        return self.table[inputs]

    def states(self) -> list[DensityOperator]:
        """Outputs of a one-sender channel, in alphabet order."""
        if self.k != 1:
            raise DimensionMismatch("states() is only defined for single-sender channels")
        return [self.table[(x,)] for x in self.alphabets[0]]

    def tensor_array(self) -> np.ndarray:
        """All outputs as an array of shape ``(|X_1|, ..., |X_k|, d, d)``."""
        shape = tuple(len(a) for a in self.alphabets) + (self.out_dim, self.out_dim)
        arr = np.empty(shape, dtype=np.complex128)
        for key, rho in self.table.items():
            arr[tuple(self._index[i][s] for i, s in enumerate(key))] = rho.mat
        return arr

    def allclose(self, other: CqMacChannel, atol: float = 1e-12) -> bool:
        return (
            self.alphabets == other.alphabets
            and self.out_dim == other.out_dim
            and all(self.table[key].allclose(other.table[key], atol) for key in self.table)
        )


def average_slot(ch: CqMacChannel, slot: int, dist: DistLike) -> CqMacChannel:
    """Mix out one sender: ``W'(..) = sum_x dist(x) W(.., x, ..)``."""
    ch._check_slot(slot)
    if ch.k == 1:
        raise SlotOutOfRange("cannot average away the only sender")
    p = _probs(dist)
    if p.size != len(ch.alphabets[slot]):
        raise DimensionMismatch(f"distribution has {p.size} entries, slot {slot} has {len(ch.alphabets[slot])} symbols")
    arr = np.tensordot(p, np.moveaxis(ch.tensor_array(), slot, 0), axes=(0, 0))
    rest = ch.alphabets[:slot] + ch.alphabets[slot + 1:]
    table = {}
    for idx in itertools.product(*(range(len(a)) for a in rest)):
        key = tuple(a[i] for a, i in zip(rest, idx))
        table[key] = arr[idx]
    return CqMacChannel(rest, table)


def freeze_slots(ch: CqMacChannel, frozen: Mapping[int, Union[Hashable, DistLike]]) -> CqMacChannel:
    """Average out every slot in ``frozen``.

    Values are either an alphabet symbol (point mass) or a distribution over
    that slot's alphabet.  Remaining slots keep their relative order.
    """
    for slot in frozen:
        ch._check_slot(slot)
    out = ch
    for slot in sorted(frozen, reverse=True):
        out = average_slot(out, slot, _as_dist(ch, slot, frozen[slot]))
    return out


def _as_dist(ch: CqMacChannel, slot: int, value) -> np.ndarray:
    if isinstance(value, InputDistribution):
        return value.probs
    if isinstance(value, (list, tuple, np.ndarray)) and len(value) == len(ch.alphabets[slot]) and not _is_symbol(ch, slot, value):
        return _probs(value)
    p = np.zeros(len(ch.alphabets[slot]))
    p[ch.symbol_index(slot, value)] = 1.0
    return p


def _is_symbol(ch: CqMacChannel, slot: int, value) -> bool:
    try:
        return value in ch._index[slot]
    except TypeError:
        return False


def post_compose(ch: CqMacChannel, q: QuantumChannel) -> CqMacChannel:
    """Apply the quantum channel ``q`` to every output of ``ch``."""
    if q.dim_in != ch.out_dim:
        raise DimensionMismatch(f"channel input dim {q.dim_in} does not match output dim {ch.out_dim}")
    return CqMacChannel(ch.alphabets, {key: q.apply_matrix(rho.mat) for key, rho in ch.table.items()})


class ProductChannel:
    """Lazy n-fold memoryless extension of a cq MAC channel.

    Inputs are one length-n symbol string per sender; the output is the tensor
    product over letters of the per-letter outputs, letter 0 first.
    """

    def __init__(self, base: CqMacChannel, n: int):
        if n < 1:
            raise ValueError("block length must be positive")
        if base.out_dim**n > qm.MAX_DIM:
            raise DimensionCapExceeded(f"output dimension {base.out_dim}^{n} exceeds {qm.MAX_DIM}")
        self.base = base
        self.n = int(n)

    @property
    def k(self) -> int:
        return self.base.k

    @property
    def letter_dim(self) -> int:
        return self.base.out_dim

    @property
    def out_dim(self) -> int:
        return self.base.out_dim**self.n

    def letters(self, inputs: Sequence[Sequence[Hashable]]) -> list[tuple]:
        inputs = [tuple(s) for s in inputs]
        if len(inputs) != self.k:
            raise SymbolOutOfAlphabet(f"expected {self.k} input strings, got {len(inputs)}")
        if any(len(s) != self.n for s in inputs):
            raise LengthMismatch(f"every input string must have length {self.n}")
        return list(zip(*inputs))

    def apply_matrix(self, inputs: Sequence[Sequence[Hashable]]) -> np.ndarray:
        return qm.tensor_all(self.base.apply(letter).mat for letter in self.letters(inputs))

    def apply(self, inputs: Sequence[Sequence[Hashable]]) -> DensityOperator:
        return DensityOperator(self.apply_matrix(inputs))


def product_extend(ch: CqMacChannel, n: int) -> ProductChannel:
    return ProductChannel(ch, n)


@dataclass(frozen=True, eq=False)
class AvcView:
    """Arbitrarily varying cq channel ``(x, t) -> W(x, t)``.

    ``legit`` is the honest sender's alphabet and ``states_set`` the jammer's.
    """

    legit: tuple
    state_set: tuple
    table: Mapping

    @property
    def out_dim(self) -> int:
        return next(iter(self.table.values())).dim

    def w(self, x, t) -> np.ndarray:
        return self.table[(x, t)].mat

    def as_array(self) -> np.ndarray:
        """Shape ``(|X|, |Theta|, d, d)``."""
        return np.array([[self.table[(x, t)].mat for t in self.state_set] for x in self.legit])

    def average(self, p_t: DistLike) -> CqMacChannel:
        """The averaged single-sender channel ``x -> sum_t p(t) W(x, t)``."""
        return average_slot(self.as_channel(), 1, p_t)

    def as_channel(self) -> CqMacChannel:
        return CqMacChannel([self.legit, self.state_set], self.table)

    @classmethod
    def from_array(cls, arr, legit=None, state_set=None) -> AvcView:
        arr = np.asarray(arr, dtype=np.complex128)
        legit = tuple(range(arr.shape[0])) if legit is None else tuple(legit)
        state_set = tuple(range(arr.shape[1])) if state_set is None else tuple(state_set)
        ch = CqMacChannel([legit, state_set], {
            (x, t): arr[i, j] for i, x in enumerate(legit) for j, t in enumerate(state_set)
        })
        return cls(ch.alphabets[0], ch.alphabets[1], ch.table)


def avc_view(ch: CqMacChannel, honest_slot: int, jammer_slot: int,
             frozen: Mapping[int, Union[Hashable, DistLike]] | None = None) -> AvcView:
    """View ``ch`` as an AVC for ``honest_slot`` jammed by ``jammer_slot``.

    All other slots must be listed in ``frozen`` (a symbol or a product-form
    distribution each).
    """
    ch._check_slot(honest_slot)
    ch._check_slot(jammer_slot)
    if honest_slot == jammer_slot:
        raise SlotOutOfRange("honest and jammer slots must differ")
    frozen = dict(frozen or {})
    others = set(range(ch.k)) - {honest_slot, jammer_slot}
    if set(frozen) != others:
        raise SlotOutOfRange(f"frozen must cover exactly slots {sorted(others)}")
    two = freeze_slots(ch, frozen)
    # freeze_slots keeps relative order; swap if the jammer comes first
    if jammer_slot < honest_slot:
        table = {(x, t): two.table[(t, x)] for t in two.alphabets[0] for x in two.alphabets[1]}
        return AvcView(two.alphabets[1], two.alphabets[0], table)
    return AvcView(two.alphabets[0], two.alphabets[1], dict(two.table))


# ---------------------------------------------------------------- fixtures

def _ab(i: int, j: int) -> int:
    return 3 * i + j


def example_channel() -> CqMacChannel:
    """Two senders, X1={0,1}, X2={0,1,2}; W(i, j) = |i>|j><j|<i| on C^2 x C^3."""
    table = {(i, j): DensityOperator.basis(_ab(i, j), 6) for i in range(2) for j in range(3)}
    return CqMacChannel([(0, 1), (0, 1, 2)], table)


def _outer(a: int, b: int) -> np.ndarray:
    m = np.zeros((6, 6), dtype=np.complex128)
    m[a, b] = 1.0
    return m


def example_povms() -> tuple[Povm, Povm]:
    """Decoders of the worked example: ``D1`` reads the A part, ``D2`` the B part.

    ``D2`` resolves ``|0,2>`` and ``|1,2>`` only in the +/- basis of A, which
    is what lets a jamming sender 2 disturb the A register.
    """
    d1 = tuple(sum(_outer(_ab(i, j), _ab(i, j)) for j in range(3)) for i in range(2))
    half = 0.5 * (_outer(_ab(0, 2), _ab(0, 2)) + _outer(_ab(1, 2), _ab(1, 2)))
    cross = 0.5 * (_outer(_ab(0, 2), _ab(1, 2)) + _outer(_ab(1, 2), _ab(0, 2)))
    d2_0 = _outer(_ab(0, 0), _ab(0, 0)) + _outer(_ab(1, 0), _ab(1, 0)) + half + cross
    d2_1 = _outer(_ab(0, 1), _ab(0, 1)) + _outer(_ab(1, 1), _ab(1, 1)) + half - cross
    return Povm(d1, (0, 1)), Povm((d2_0, d2_1), (0, 1))


def factorized_channel(sizes: Sequence[int]) -> CqMacChannel:
    """``W(x_1..x_k) = |x_1><x_1| x ... x |x_k><x_k|`` with local dims ``sizes``."""
    alphabets = [tuple(range(s)) for s in sizes]
    table = {}
    for key in itertools.product(*alphabets):
        table[key] = qm.tensor_all(qm.projector(qm.ket(x, s)) for x, s in zip(key, sizes))
    return CqMacChannel(alphabets, table)


def constant_channel(sizes: Sequence[int], dim: int = 2) -> CqMacChannel:
    """Every input tuple maps to the maximally mixed state of dimension ``dim``."""
    alphabets = [tuple(range(s)) for s in sizes]
    mixed = np.eye(dim) / dim
    return CqMacChannel(alphabets, {key: mixed for key in itertools.product(*alphabets)})


def local_povms(sizes: Sequence[int]) -> list[Povm]:
    """Computational-basis measurement of each tensor factor of ``factorized_channel``."""
    povms = []
    for slot, s in enumerate(sizes):
        elems = []
        for x in range(s):
            factors = [np.eye(d) for d in sizes]
            factors[slot] = qm.projector(qm.ket(x, s))
            elems.append(qm.tensor_all(factors))
        povms.append(Povm(tuple(elems), tuple(range(s))))
    return povms


# ---------------------------------------------------------------- file I/O

def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _decode_matrix(obj, where: str) -> np.ndarray:
    try:
        a = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: matrix must be a nested list of [re, im] pairs") from None
    if a.ndim != 3 or a.shape[2] != 2 or a.shape[0] != a.shape[1]:
        raise ParseError(f"{where}: expected a square matrix of [re, im] pairs, got shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def _read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return data


def channel_to_dict(ch: CqMacChannel) -> dict:
    return {
        "k": ch.k,
        "alphabets": [list(a) for a in ch.alphabets],
        "out_dim": ch.out_dim,
        "entries": [
            {"input": list(key), "matrix": _encode_matrix(rho.mat)}
            for key, rho in ch.table.items()
        ],
    }


def channel_from_dict(data: dict, source: str = "<channel>") -> CqMacChannel:
    for fld in ("k", "alphabets", "out_dim", "entries"):
        if fld not in data:
            raise ParseError(f"{source}: missing field {fld!r}")
    alphabets = data["alphabets"]
    if not isinstance(alphabets, list) or len(alphabets) != data["k"]:
        raise ParseError(f"{source}: field 'alphabets' must list {data['k']} alphabets")
    alphabets = [tuple(a) for a in alphabets]
    table = {}
    for i, entry in enumerate(data["entries"]):
        where = f"{source}: entries[{i}]"
        if not isinstance(entry, dict) or "input" not in entry or "matrix" not in entry:
            raise ParseError(f"{where}: needs 'input' and 'matrix'")
        key = tuple(entry["input"])
        if len(key) != data["k"]:
            raise ParseError(f"{where}.input: expected {data['k']} symbols")
        if key in table:
            raise ParseError(f"{where}.input: duplicate input {list(key)}")
        m = _decode_matrix(entry["matrix"], f"{where}.matrix")
        if m.shape[0] != data["out_dim"]:
            raise ParseError(f"{where}.matrix: dimension {m.shape[0]} != out_dim {data['out_dim']}")
        table[key] = m
    missing = [key for key in itertools.product(*alphabets) if key not in table]
    if missing:
        raise ParseError(f"{source}: table not total (missing input {list(missing[0])})")
    extra = [key for key in table if key not in set(itertools.product(*alphabets))]
    if extra:
        raise ParseError(f"{source}: input {list(extra[0])} outside the alphabets")
    return CqMacChannel(alphabets, table)


def save_channel(ch: CqMacChannel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(ch), indent=1))


def load_channel(path) -> CqMacChannel:
    return channel_from_dict(_read_json(path), str(path))


def povm_to_dict(p: Povm) -> dict:
    return {"dim": p.dim, "labels": list(p.labels), "elements": [_encode_matrix(e) for e in p.elements]}


def povm_from_dict(data: dict, source: str = "<povm>") -> Povm:
    if "elements" not in data:
        raise ParseError(f"{source}: missing field 'elements'")
    elems = [_decode_matrix(e, f"{source}: elements[{i}]") for i, e in enumerate(data["elements"])]
    labels = tuple(data.get("labels") or range(len(elems)))
    return Povm(tuple(elems), labels)


def save_povm(p: Povm, path) -> None:
    Path(path).write_text(json.dumps(povm_to_dict(p), indent=1))


def load_povm(path) -> Povm:
    return povm_from_dict(_read_json(path), str(path))
