"""Messages carried by the choice of a typical error, plus the noisy-channel codebook.

Noiseless variant: a ``message_bits``-bit index is one-time padded, picks set
``j`` of an :class:`ErrorPartition`, and a keyed uniform member of that set is
applied as the channel error.  Bob reads the syndrome, finds the set, strips
the pad.

Noisy variant: weight-``M`` codewords on a keyed subset of ``N'`` active slots,
pairwise separated by more than ``2 p q N``, decoded by nearest codeword.
"""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from .channels import ChannelModel, binary_entropy, channel_entropy
from .keysource import KeyStream, key_consumption_p2, select_subset, twirl_pad
from .pauli import PauliString
from .syndrome import (
    ErrorPartition,
    TypicalErrorSet,
    TypicalSyndromeModel,
    build_partition,
    build_typical_set,
    replay_representative,
    representative_error,
)


class DecodeFailure(Exception):
    """The received error lies outside every partition set."""


class ClampWarning(UserWarning):
    pass


@dataclass(frozen=True)
class StegoParams2:
    N: int
    channel: ChannelModel
    delta: float
    typical: TypicalErrorSet
    partition: ErrorPartition
    message_bits: int

    @classmethod
    def build(cls, channel: ChannelModel, N: int, delta: float, window: str = "probability") -> "StegoParams2":
        """Typical set, then a partition truncated to a power of two sets.

        Truncation keeps padded indices uniform over the sets actually used.
        """
        channel.require_protocol_regime()
        ts = build_typical_set(channel, N, delta, window=window)
        full = build_partition(ts)
        bits = full.C.bit_length() - 1
        part = build_partition(ts, max_sets=1 << bits)
        return cls(N, channel, delta, ts, part, bits)

    @property
    def syndrome_model(self) -> TypicalSyndromeModel:
        return TypicalSyndromeModel(self.typical)

    @property
    def rate(self) -> float:
        return self.message_bits / self.N

    @property
    def predicted_key(self):
        return key_consumption_p2(self.N, self.message_bits / self.N + self.delta, self.delta)

    @property
    def spare_syndrome_bits(self) -> float:
        """Syndrome-space capacity not used by the message (ancilla padding)."""
        return self.typical.entropy * self.N - self.message_bits


@dataclass(frozen=True)
class SyndromeBlock:
    N: int
    channel_error: PauliString
    syndrome: int
    pad_bits: int
    representative_bits: int

    @property
    def key_bits(self) -> int:
        return self.pad_bits + self.representative_bits


def _pad_value(key: KeyStream, nbits: int) -> tuple[int, int]:
    """Twirl pad over the message qubits; a classical index only feels the X part."""
    start = key.cursor
    pad = twirl_pad(key, nbits)
    return pad.x, key.cursor - start


def encode_p2(message: int, key: KeyStream, params: StegoParams2) -> SyndromeBlock:
    if not 0 <= message < 1 << params.message_bits:
        raise ValueError(f"message {message} outside [0, 2^{params.message_bits})")
    pad, pad_bits = _pad_value(key, params.message_bits)
    err, rep_bits = representative_error(params.partition, message ^ pad, key)
    return SyndromeBlock(params.N, err, params.syndrome_model.syndrome_of(err), pad_bits, rep_bits)


def decode_p2(block: SyndromeBlock, key: KeyStream, params: StegoParams2) -> int:
    """Recover the message from the syndrome Bob measures on ``block.channel_error``.

    Raises :class:`DecodeFailure` when the error falls outside the partition;
    the key is still advanced past the pad so later blocks stay aligned.
    """
    model = params.syndrome_model
    pad, _ = _pad_value(key, params.message_bits)
    err = model.error_of(model.syndrome_of(block.channel_error))
    j = params.partition.locate(err)
    if j is None:
        raise DecodeFailure(f"error of weight {err.weight} is not in any partition set")
    replay_representative(params.partition, j, key)
    return j ^ pad


# ---------------------------------------------------------------------------
# noisy channel: weight-M codebook on a keyed subset of slots
# ---------------------------------------------------------------------------
def optimal_q(p: float, m: float) -> float:
    """Active-slot fraction ``m 2^h / (2^h - 1)`` maximising :func:`stirling_rate`.

    Returns 0 for ``m = 0`` and clamps to 1 with a :class:`ClampWarning`.
    """
    if not 0 < p < 0.5:
        raise ValueError("need 0 < p < 1/2")
    if m < 0:
        raise ValueError("codeword density must be non-negative")
    g = 2.0 ** binary_entropy(p)
    q = m * g / (g - 1)
    if q > 1:
        warnings.warn(f"optimal fraction {q:.4g} exceeds 1; clamped", ClampWarning, stacklevel=2)
        return 1.0
    return q


def stirling_rate(q: float, m: float, p: float) -> float:
    """Large-N rate ``q h(m/q) - q h(p)`` for density ``m`` and active fraction ``q``."""
    if not 0 < m <= q:
        raise ValueError("need 0 < m <= q")
    return q * binary_entropy(m / q) - q * binary_entropy(p)


def noisy_rate(p: float, delta_p: float) -> float:
    """Rate at the optimal fraction: ``-(delta_p/(1-2p)) log2(2^h(p) - 1)``."""
    if not 0 < p < 0.5:
        raise ValueError("need 0 < p < 1/2")
    return -(delta_p / (1 - 2 * p)) * math.log2(2.0 ** binary_entropy(p) - 1)


@dataclass(frozen=True)
class NoisyCodebook:
    N: int
    p: float
    delta_p: float
    q_fraction: float
    active_slots: tuple[int, ...]
    M: int
    min_distance: int
    codewords: tuple[int, ...]  # bitmasks over the active slots, bit i = active_slots[i]

    @property
    def n_active(self) -> int:
        return len(self.active_slots)

    @property
    def count(self) -> int:
        return len(self.codewords)

    @property
    def rate(self) -> float:
        return math.log2(self.count) / self.N

    def codeword_bits(self, index: int) -> np.ndarray:
        """Length-``N`` flip pattern Alice applies for message ``index``."""
        out = np.zeros(self.N, dtype=np.uint8)
        cw = self.codewords[index]
        for i, slot in enumerate(self.active_slots):
            out[slot] = (cw >> i) & 1
        return out

    def pairwise_min_distance(self) -> int | None:
        """Exhaustive check of the separation actually achieved."""
        if self.count < 2:
            return None
        return min((a ^ b).bit_count() for a, b in itertools.combinations(self.codewords, 2))

    def to_json(self) -> str:
        doc = {
            "N": self.N,
            "p": repr(self.p),
            "delta_p": repr(self.delta_p),
            "q_fraction": repr(self.q_fraction),
            "active_slots": list(self.active_slots),
            "M": self.M,
            "min_distance": self.min_distance,
            "codewords": [[i for i in range(self.n_active) if (cw >> i) & 1] for cw in self.codewords],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "NoisyCodebook":
        doc = json.loads(text)
        words = tuple(sum(1 << i for i in w) for w in doc["codewords"])
        return cls(
            int(doc["N"]),
            float(doc["p"]),
            float(doc["delta_p"]),
            float(doc["q_fraction"]),
            tuple(int(s) for s in doc["active_slots"]),
            int(doc["M"]),
            int(doc["min_distance"]),
            words,
        )


def codeword_weight(N: int, p: float, delta_p: float) -> int:
    return int(math.floor(N * delta_p / (1 - 2 * p) + 0.5))


def build_noisy_codebook(
    N: int, p: float, delta_p: float, key: KeyStream, max_candidates: int = 2_000_000
) -> NoisyCodebook:
    """Greedy codebook: scan weight-``M`` words in lexicographic order of their
    support and keep each one at distance ``>= floor(2 p q N) + 1`` from all kept."""
    if not 0 < p < 0.5:
        raise ValueError("need 0 < p < 1/2")
    if delta_p < 0:
        raise ValueError("delta_p must be non-negative")
    M = codeword_weight(N, p, delta_p)
    q = optimal_q(p, M / N)
    n_active = max(M, int(math.floor(q * N + 0.5)))
    if n_active > N:
        raise ValueError(f"active slots {n_active} exceed N = {N}")
    d_min = int(math.floor(2 * p * q * N)) + 1
    slots = tuple(select_subset(key, N, n_active).subset)
    if M == 0:
        return NoisyCodebook(N, p, delta_p, q, slots, 0, d_min, (0,))
    if d_min > 2 * M:
        raise ValueError(f"weight-{M} words are at most {2 * M} apart; separation {d_min} is infeasible")
    if comb(n_active, M) > max_candidates:
        raise ValueError(f"C({n_active},{M}) candidates exceed the greedy search limit {max_candidates}")
    kept: list[int] = []
    for support in itertools.combinations(range(n_active), M):
        w = sum(1 << i for i in support)
        if all((w ^ c).bit_count() >= d_min for c in kept):
            kept.append(w)
    return NoisyCodebook(N, p, delta_p, q, slots, M, d_min, tuple(kept))


def _nearest(r: int, cb: NoisyCodebook) -> int:
    if cb.n_active <= 64:
        d = np.bitwise_count(_word_array(cb) ^ np.uint64(r))
        return int(np.argmin(d))  # argmin returns the first minimum
    return min(range(cb.count), key=lambda i: ((r ^ cb.codewords[i]).bit_count(), i))


def _word_array(cb: NoisyCodebook) -> np.ndarray:
    return np.array(cb.codewords, dtype=np.uint64)


def decode_noisy(received, cb: NoisyCodebook) -> int:
    """Nearest codeword on the active slots; ties go to the lowest index."""
    received = np.asarray(received, dtype=np.uint8)
    if received.shape != (cb.N,):
        raise ValueError(f"received word must have length {cb.N}")
    r = sum(int(received[s]) << i for i, s in enumerate(cb.active_slots))
    return _nearest(r, cb)


def block_error_rate(cb: NoisyCodebook, trials: int, rng: np.random.Generator) -> float:
    """Monte-Carlo block error rate over BSC(p) with uniformly chosen messages."""
    if trials < 1:
        raise ValueError("trials must be positive")
    # flips off the active slots never reach the decoder
    flips = rng.random((trials, cb.n_active)) < cb.p
    msgs = rng.integers(0, cb.count, size=trials)
    errors = 0
    for t in range(trials):
        noise = sum(1 << int(i) for i in np.flatnonzero(flips[t]))
        errors += _nearest(cb.codewords[msgs[t]] ^ noise, cb) != msgs[t]
    return errors / trials


def noiseless_rate_target(channel: ChannelModel, delta: float) -> float:
    """``s - delta``, the asymptotic noiseless rate."""
    return channel_entropy(channel) - delta
