"""Syndrome models, typical error sets and the keyed equiprobable partition.

Strings of a fixed weight ``w`` on ``N`` slots form a *weight class* of size
``C(N, w) * a**w`` where ``a`` is the number of non-identity symbols the
channel can produce (1 for the BSC, 3 for the depolarizing channel).  A string
is addressed inside its class by ``rank(support) * a**w + pattern`` with the
pattern read as base-``a`` digits over the support.  Partitions are stored as
index ranges inside classes, so nothing of size 2**N is ever materialised.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from math import comb
from typing import Iterator, NamedTuple

import numpy as np

from .channels import ChannelModel, binary_entropy, channel_entropy
from .keysource import KeyStream, rank_subset, unrank_subset
from .pauli import PauliString


# ---------------------------------------------------------------------------
# concrete code: Hamming [7,4] and the Steane [[7,1]] code built on it
# ---------------------------------------------------------------------------
def hamming74_syndrome(bits) -> int:
    """Parity-check syndrome; column ``i`` of the check matrix is ``i + 1`` in binary."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (7,):
        raise ValueError("Hamming-7 syndrome needs exactly 7 bits")
    s = 0
    for i in np.flatnonzero(bits):
        s ^= int(i) + 1
    return s


class SyndromeModel:
    """Nondegenerate code seen only through its error <-> syndrome relabelling."""

    N: int

    def syndrome_of(self, e: PauliString):
        raise NotImplementedError

    def error_of(self, syndrome) -> PauliString:
        raise NotImplementedError

    def correctable(self, e: PauliString) -> bool:
        raise NotImplementedError


class SteaneCode(SyndromeModel):
    """[[7,1]] CSS code; X and Z parts are each decoded with Hamming-7.

    Logical operators are transversal, so a logical symbol ``s`` is carried by
    ``s`` on all seven qubits.
    """

    N = 7

    def syndrome_of(self, e: PauliString) -> int:
        if e.n != 7:
            raise ValueError("Steane code acts on 7 qubits")
        return 8 * hamming74_syndrome(e.z_bits()) + hamming74_syndrome(e.x_bits())

    def error_of(self, syndrome: int) -> PauliString:
        sz, sx = divmod(int(syndrome), 8)
        if not 0 <= sz < 8:
            raise ValueError(f"invalid Steane syndrome {syndrome}")
        x = 1 << (sx - 1) if sx else 0
        z = 1 << (sz - 1) if sz else 0
        return PauliString(7, x, z)

    def correctable(self, e: PauliString) -> bool:
        return e.n == 7 and e.weight <= 1

    def encode(self, logical: PauliString) -> PauliString:
        codes = np.repeat(logical.codes(), 7)
        return PauliString.from_codes(codes)

    def decode(self, frame: PauliString) -> PauliString:
        if frame.n % 7:
            raise ValueError("frame length must be a multiple of 7")
        xs = frame.x_bits().reshape(-1, 7)
        zs = frame.z_bits().reshape(-1, 7)
        out = []
        for xb, zb in zip(xs, zs):
            xb, zb = xb.copy(), zb.copy()
            sx, sz = hamming74_syndrome(xb), hamming74_syndrome(zb)
            if sx:
                xb[sx - 1] ^= 1
            if sz:
                zb[sz - 1] ^= 1
            lx, lz = int(xb.sum() % 2), int(zb.sum() % 2)
            out.append(_CODE[(lx, lz)])
        return PauliString.from_codes(out)


_CODE = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}


# ---------------------------------------------------------------------------
# weight classes
# ---------------------------------------------------------------------------
def alphabet_size(ch: ChannelModel) -> int:
    if ch.kind == "bsc":
        return 1
    if ch.kind == "depolarizing":
        return 3
    raise ValueError("weight-class machinery needs a BSC or depolarizing channel")


def class_size(N: int, w: int, a: int) -> int:
    return comb(N, w) * a**w


def unrank_error(N: int, w: int, a: int, index: int) -> PauliString:
    """The ``index``-th string of weight ``w`` in its class."""
    support_rank, pattern = divmod(index, a**w)
    support = unrank_subset(support_rank, N, w)
    codes = np.zeros(N, dtype=np.uint8)
    digits = []
    for _ in range(w):
        pattern, d = divmod(pattern, a)
        digits.append(d)
    # most significant digit belongs to the first support position
    if support:
        codes[np.asarray(support)] = 1 + np.asarray(digits[::-1], dtype=np.uint8)
    return PauliString.from_codes(codes)


def rank_error(e: PauliString, a: int) -> tuple[int, int]:
    """``(weight, index)`` of ``e`` within its weight class."""
    codes = e.codes()
    support = np.flatnonzero(codes)
    if a == 1 and (codes[support] != 1).any():
        raise ValueError("BSC strings may only contain X")
    pattern = 0
    for c in codes[support]:
        pattern = pattern * a + int(c) - 1
    w = int(support.size)
    return w, rank_subset(support.tolist(), e.n) * a**w + pattern


def _log2_string_prob(N: int, w: int, p: float, a: int) -> float:
    """log2 of the probability of one particular string of weight ``w``."""
    lp = -math.inf if p == 0 else math.log2(p / a)
    lq = -math.inf if p == 1 else math.log2(1 - p)
    return (w * lp if w else 0.0) + ((N - w) * lq if N - w else 0.0)


def _log2_class_prob(N: int, w: int, p: float, a: int) -> float:
    return math.log2(class_size(N, w, a)) + _log2_string_prob(N, w, p, a)


# ---------------------------------------------------------------------------
# typical set
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TypicalErrorSet:
    """All strings whose weight lies in ``[k_lo, k_hi]``."""

    channel: ChannelModel
    N: int
    delta: float
    window: str
    k_lo: int
    k_hi: int
    entropy: float
    total_probability: float

    @property
    def alphabet(self) -> int:
        return alphabet_size(self.channel)

    @property
    def weights(self) -> range:
        return range(self.k_lo, self.k_hi + 1)

    @property
    def epsilon(self) -> float:
        return max(0.0, 1.0 - self.total_probability)

    def contains(self, e: PauliString) -> bool:
        if e.n != self.N:
            return False
        if self.alphabet == 1 and e.z:
            return False
        return self.k_lo <= e.weight <= self.k_hi

    def log2_string_probability(self, w: int) -> float:
        return _log2_string_prob(self.N, w, self.channel.error_rate, self.alphabet)

    def probability_bounds(self) -> tuple[float, float]:
        """Smallest and largest per-string probability inside the window."""
        vals = [2.0 ** self.log2_string_probability(w) for w in self.weights]
        return min(vals), max(vals)


def build_typical_set(ch: ChannelModel, N: int, delta: float, window: str = "probability") -> TypicalErrorSet:
    """Weight window of the typical errors of ``N`` uses of ``ch``.

    ``window="probability"`` keeps strings with per-string probability in
    ``[2^-N(s+delta), 2^-N(s-delta)]``; ``window="relative"`` keeps weights in
    ``[Np(1-delta), Np(1+delta)]``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    a = alphabet_size(ch)
    p = ch.error_rate
    s = channel_entropy(ch)
    eps = 1e-9
    if window == "relative":
        lo, hi = N * p * (1 - delta), N * p * (1 + delta)
    elif window == "probability":
        if p in (0.0, 1.0):
            lo = hi = N * p
        else:
            slope = math.log2(a * (1 - p) / p)
            if abs(slope) < 1e-15:
                lo, hi = 0, N  # every string equally likely
            else:
                half = N * delta / abs(slope)
                lo, hi = N * p - half, N * p + half
    else:
        raise ValueError(f"unknown window {window!r}")
    k_lo = max(0, math.ceil(lo - eps))
    k_hi = min(N, math.floor(hi + eps))
    if k_lo > k_hi:
        raise ValueError(
            f"empty typical window: weights in [{lo:.4g}, {hi:.4g}] contain no integer "
            f"(N={N}, p={p}, delta={delta}); increase delta or N"
        )
    total = math.fsum(2.0 ** _log2_class_prob(N, w, p, a) for w in range(k_lo, k_hi + 1))
    return TypicalErrorSet(ch, N, delta, window, k_lo, k_hi, s, min(total, 1.0))


class TypicalSyndromeModel(SyndromeModel):
    """Abstract nondegenerate code: each string gets its own syndrome label.

    Labels enumerate strings by weight, then by class index.  Only strings in
    the typical window count as correctable.
    """

    def __init__(self, typical: TypicalErrorSet):
        self.typical = typical
        self.N = typical.N
        self._a = typical.alphabet

    def _offset(self, w: int) -> int:
        return sum(class_size(self.N, v, self._a) for v in range(w))

    def syndrome_of(self, e: PauliString) -> int:
        w, idx = rank_error(e, self._a)
        return self._offset(w) + idx

    def error_of(self, syndrome: int) -> PauliString:
        rest = int(syndrome)
        for w in range(self.N + 1):
            size = class_size(self.N, w, self._a)
            if rest < size:
                return unrank_error(self.N, w, self._a, rest)
            rest -= size
        raise ValueError(f"syndrome label {syndrome} out of range")

    def correctable(self, e: PauliString) -> bool:
        return self.typical.contains(e)


# ---------------------------------------------------------------------------
# partition into roughly equiprobable sets
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class WeightClass:
    weight: int
    class_size: int
    set_size: int
    num_sets: int
    offset: int

    @property
    def leftover(self) -> int:
        return self.class_size - self.set_size * self.num_sets


@dataclass(frozen=True)
class ErrorPartition:
    """Sets ``S_0 .. S_{C-1}``; set ``j`` of a class holds indices
    ``[j * set_size, (j + 1) * set_size)`` of that class.  Strings past the last
    full set of a class belong to no set."""

    N: int
    alphabet: int
    p: float
    ref_weight: int
    classes: tuple[WeightClass, ...]

    @property
    def C(self) -> int:
        return sum(c.num_sets for c in self.classes)

    @property
    def log2_C(self) -> float:
        return math.log2(self.C)

    def class_of(self, j: int) -> tuple[WeightClass, int]:
        if not 0 <= j < self.C:
            raise IndexError(f"set index {j} out of range [0, {self.C})")
        for cls in self.classes:
            if j < cls.offset + cls.num_sets:
                return cls, j - cls.offset
        raise AssertionError("unreachable")

    def set_size(self, j: int) -> int:
        return self.class_of(j)[0].set_size

    def member(self, j: int, i: int) -> PauliString:
        cls, local = self.class_of(j)
        if not 0 <= i < cls.set_size:
            raise IndexError(i)
        return unrank_error(self.N, cls.weight, self.alphabet, local * cls.set_size + i)

    def members(self, j: int) -> Iterator[PauliString]:
        for i in range(self.set_size(j)):
            yield self.member(j, i)

    def locate(self, e: PauliString) -> int | None:
        """Index of the set holding ``e``, or ``None``."""
        if e.n != self.N or (self.alphabet == 1 and e.z):
            return None
        w = e.weight
        for cls in self.classes:
            if cls.weight == w:
                _, idx = rank_error(e, self.alphabet)
                local = idx // cls.set_size
                return cls.offset + local if local < cls.num_sets else None
        return None

    # masses are under the channel law, before normalisation
    def log2_string_probability(self, w: int) -> float:
        return _log2_string_prob(self.N, w, self.p, self.alphabet)

    def set_mass(self, j: int) -> float:
        cls, _ = self.class_of(j)
        return cls.set_size * 2.0 ** self.log2_string_probability(cls.weight)

    def covered_mass(self) -> float:
        return math.fsum(
            c.num_sets * c.set_size * 2.0 ** self.log2_string_probability(c.weight) for c in self.classes
        )

    def reference_mass(self) -> float:
        """Per-string probability at the reference weight: the target set mass."""
        return 2.0 ** self.log2_string_probability(self.ref_weight)

    def mass_deviation_bound(self, j: int) -> float:
        """Rounding bound on ``|set_mass(j) - reference_mass()|``.

        Set sizes are the nearest integer to reference/per-string probability,
        so the error is at most half a string's probability.
        """
        cls, _ = self.class_of(j)
        return 0.5 * 2.0 ** self.log2_string_probability(cls.weight) if cls.weight != self.ref_weight else 0.0

    def to_json(self) -> str:
        doc = {
            "N": self.N,
            "alphabet": self.alphabet,
            "p": repr(self.p),
            "ref_weight": self.ref_weight,
            "C": str(self.C),
            "classes": [{k: str(v) for k, v in asdict(c).items()} for c in self.classes],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ErrorPartition":
        doc = json.loads(text)
        classes = tuple(WeightClass(**{k: int(v) for k, v in c.items()}) for c in doc["classes"])
        part = cls(int(doc["N"]), int(doc["alphabet"]), float(doc["p"]), int(doc["ref_weight"]), classes)
        if str(part.C) != doc["C"]:
            raise ValueError("partition descriptor is inconsistent")
        return part


def _round_power(base: float, exponent: int) -> int:
    """Nearest integer to ``base ** exponent`` without float overflow."""
    lg = exponent * math.log2(base)
    if lg < 60:
        return max(1, int(math.floor(base**exponent + 0.5)))
    m = int(lg)
    return int(2.0 ** (lg - m) * 2**52) << (m - 52)


def build_partition(ts: TypicalErrorSet, max_sets: int | None = None) -> ErrorPartition:
    """Group typical strings into sets of (nearly) equal channel probability.

    Within weight class ``k`` every set holds ``n_k = round(P(k_ref) / P(k))``
    strings, ``P`` being the per-string probability and ``k_ref`` the window
    weight where it peaks, so each set carries mass close to ``P(k_ref)``.  The
    class yields ``floor(class_size / n_k)`` sets; the remainder is left out.
    ``max_sets`` truncates the partition, dropping sets from the heaviest end.
    """
    a, N, p = ts.alphabet, ts.N, ts.channel.error_rate
    weights = list(ts.weights)
    logs = [_log2_string_prob(N, w, p, a) for w in weights]
    ref = weights[int(np.argmax(logs))]
    ratio = a * (1 - p) / p if 0 < p < 1 else math.inf
    classes = []
    offset = 0
    for w in weights:
        size = class_size(N, w, a)
        steps = abs(w - ref)
        if steps == 0 or ratio == 1:
            n = 1
        else:
            base = ratio if ratio > 1 else 1 / ratio
            if steps * math.log2(base) > math.log2(size) + 1:
                continue
            n = _round_power(base, steps)
        count = size // n
        if max_sets is not None:
            count = min(count, max_sets - offset)
        if count <= 0:
            continue
        classes.append(WeightClass(w, size, n, count, offset))
        offset += count
    if offset == 0:
        raise ValueError("partition is empty: no weight class can hold a full set")
    return ErrorPartition(N, a, p, ref, tuple(classes))


def representative_error(part: ErrorPartition, j: int, key: KeyStream) -> tuple[PauliString, int]:
    """Keyed uniform member of set ``j``; returns the error and the key bits spent."""
    start = key.cursor
    i, _ = key.draw_below(part.set_size(j))
    return part.member(j, i), key.cursor - start


def replay_representative(part: ErrorPartition, j: int, key: KeyStream) -> int:
    """Consume the same key bits :func:`representative_error` would for set ``j``."""
    start = key.cursor
    key.draw_below(part.set_size(j))
    return key.cursor - start


# ---------------------------------------------------------------------------
# closed forms for the BSC construction
# ---------------------------------------------------------------------------
class PartitionCapacity(NamedTuple):
    log2_C: float
    message_bits: float

    @property
    def C(self) -> float:
        return 2.0**self.log2_C if self.log2_C < 1024 else math.inf


def partition_capacity(p: float, N: int, delta: float) -> PartitionCapacity:
    """Set count ``C = 1/q`` of the BSC construction over the relative window.

    ``q = p^{Np(1-delta)} (1-p)^{N(1-p+p delta)}``; the message length
    ``N (h(p) - p delta log2((1-p)/p))`` is the same number written through h.
    """
    if not 0 < p < 0.5:
        raise ValueError("need 0 < p < 1/2")
    log2_C = -(N * p * (1 - delta) * math.log2(p) + N * (1 - p + p * delta) * math.log2(1 - p))
    m_bits = N * (binary_entropy(p) - p * delta * math.log2((1 - p) / p))
    return PartitionCapacity(log2_C, m_bits)


def partition_deviation_bound(p: float, N: int, delta: float, k: int | None = None) -> float:
    """``((1-p)/(1-2p)) p^{2k} (1-p)^{N-2k}``; by default at the lightest window weight."""
    if not 0 < p < 0.5:
        raise ValueError("bound needs 0 < p < 1/2")
    if k is None:
        k = max(0, math.ceil(N * p * (1 - delta) - 1e-9))
    lg = math.log2((1 - p) / (1 - 2 * p)) + 2 * k * math.log2(p) + (N - 2 * k) * math.log2(1 - p)
    return 2.0**lg
