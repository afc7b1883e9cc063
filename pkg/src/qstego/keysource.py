"""Shared secret key: finite bit stream, keyed choices, and consumption formulas.

Every keyed choice (subsets, pads, indices) reads bits from a :class:`KeyStream`,
so Alice and Bob holding identical streams make identical choices.  Running out
of key raises :class:`KeyExhaustedError`; bits are never reused.
"""
from __future__ import annotations

import binascii
import math
import os
from dataclasses import dataclass
from math import comb
from typing import NamedTuple, Sequence

import numpy as np

from .channels import binary_entropy
from .pauli import PauliString

# bits drawn per uniform real number
UNIFORM_BITS = 53


class KeyExhaustedError(RuntimeError):
    pass


class KeyStream:
    """A finite shared bit string with a read cursor."""

    def __init__(self, bits, *, label: str = "key"):
        self._bits = np.ascontiguousarray(bits, dtype=np.uint8)
        if self._bits.ndim != 1 or (self._bits.size and self._bits.max() > 1):
            raise ValueError("key bits must be a flat 0/1 sequence")
        self.cursor = 0
        self.label = label

    @classmethod
    def from_bitstring(cls, text: str) -> "KeyStream":
        text = text.replace(" ", "")
        if set(text) - {"0", "1"}:
            raise ValueError("bitstring may only contain 0 and 1")
        return cls(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyStream":
        return cls(np.unpackbits(np.frombuffer(data, dtype=np.uint8)))

    @classmethod
    def from_hex(cls, text: str) -> "KeyStream":
        try:
            data = binascii.unhexlify("".join(text.split()))
        except binascii.Error as exc:
            raise ValueError(f"bad hex key material: {exc}") from None
        return cls.from_bytes(data)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "KeyStream":
        with open(path, encoding="ascii") as fh:
            return cls.from_hex(fh.read())

    @classmethod
    def from_seed(cls, seed: int, nbits: int) -> "KeyStream":
        """Pseudo-random key for tests and demos.  Not secret."""
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        rng = np.random.Generator(np.random.PCG64(seed))
        data = rng.bytes((nbits + 7) // 8)
        stream = cls(np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:nbits], label="seeded-test-key")
        return stream

    def __len__(self) -> int:
        return int(self._bits.size)

    @property
    def remaining(self) -> int:
        return len(self) - self.cursor

    def draw_bits(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("cannot draw a negative number of bits")
        if self.cursor + n > len(self):
            raise KeyExhaustedError(
                f"{self.label}: need {n} bits at position {self.cursor}, only {self.remaining} left"
            )
        out = self._bits[self.cursor : self.cursor + n].copy()
        self.cursor += n
        return out

    def draw_int(self, n: int) -> int:
        """Next ``n`` bits as a big-endian unsigned integer."""
        bits = self.draw_bits(n)
        if n == 0:
            return 0
        pad = (-n) % 8
        packed = np.packbits(np.concatenate([np.zeros(pad, np.uint8), bits]))
        return int.from_bytes(packed.tobytes(), "big")

    def draw_below(self, bound: int) -> tuple[int, int]:
        """Uniform integer in ``[0, bound)`` by rejection sampling.

        Returns ``(value, rejected_bits)`` where ``rejected_bits`` counts bits
        thrown away on out-of-range draws.
        """
        if bound < 1:
            raise ValueError("bound must be positive")
        nbits = (bound - 1).bit_length()
        rejected = 0
        while True:
            v = self.draw_int(nbits)
            if v < bound:
                return v, rejected
            rejected += nbits

    def draw_uniform(self) -> float:
        return self.draw_int(UNIFORM_BITS) / 2.0**UNIFORM_BITS

    def fork(self) -> "KeyStream":
        """Independent copy at the same position, as held by the other party."""
        twin = KeyStream(self._bits, label=self.label)
        twin.cursor = self.cursor
        return twin

    def segment(self, nbits: int) -> "KeyStream":
        """Hand the next ``nbits`` to an independent consumer."""
        return KeyStream(self.draw_bits(nbits), label=f"{self.label}[segment]")


# ---------------------------------------------------------------------------
# combinatorial ranking
# ---------------------------------------------------------------------------
def unrank_subset(index: int, N: int, M: int) -> list[int]:
    """The ``index``-th ``M``-subset of ``range(N)`` in lexicographic order."""
    if not 0 <= M <= N:
        raise ValueError(f"need 0 <= M <= N, got M={M}, N={N}")
    if not 0 <= index < comb(N, M):
        raise ValueError(f"rank {index} out of range for C({N},{M})")
    out: list[int] = []
    r = M
    if r == 0:
        return out
    c = comb(N - 1, r - 1)  # subsets that start at position 0
    for x in range(N):
        n = N - x
        if index < c:
            out.append(x)
            r -= 1
            if r == 0:
                break
            c = c * r // (n - 1)
        else:
            index -= c
            c = c * (n - r) // (n - 1)
    return out


def rank_subset(subset: Sequence[int], N: int) -> int:
    """Inverse of :func:`unrank_subset`."""
    subset = sorted(subset)
    M = len(subset)
    if len(set(subset)) != M or (M and (subset[0] < 0 or subset[-1] >= N)):
        raise ValueError("subset must hold distinct indices in range(N)")
    rank, prev = 0, -1
    for i, s in enumerate(subset):
        left = M - i - 1
        for x in range(prev + 1, s):
            rank += comb(N - 1 - x, left)
        prev = s
    return rank


def subset_bits(N: int, M: int) -> int:
    """ceil(log2 C(N, M)) computed on exact integers."""
    return (comb(N, M) - 1).bit_length()


class SubsetDraw(NamedTuple):
    subset: list[int]
    bits: int
    rejected_bits: int


def select_subset(key: KeyStream, N: int, M: int) -> SubsetDraw:
    """Keyed uniform choice of ``M`` of ``N`` positions."""
    if not 0 <= M <= N:
        raise ValueError(f"need 0 <= M <= N, got M={M}, N={N}")
    index, rejected = key.draw_below(comb(N, M))
    return SubsetDraw(unrank_subset(index, N, M), subset_bits(N, M), rejected)


def twirl_pad(key: KeyStream, M: int) -> PauliString:
    """``2M`` key bits read in pairs: 00->I, 01->X, 10->Y, 11->Z."""
    if M < 0:
        raise ValueError("pad length must be non-negative")
    bits = key.draw_bits(2 * M).reshape(M, 2)
    return PauliString.from_codes(2 * bits[:, 0] + bits[:, 1])


# ---------------------------------------------------------------------------
# budgets
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class KeyBudget:
    subset_bits: int = 0
    twirl_bits: int = 0
    representative_bits: int = 0

    def __post_init__(self):
        if min(self.subset_bits, self.twirl_bits, self.representative_bits) < 0:
            raise ValueError("negative key budget")

    @property
    def total(self) -> int:
        return self.subset_bits + self.twirl_bits + self.representative_bits


def key_consumption_p1(N: int, M: int) -> KeyBudget:
    if not 0 <= M <= N:
        raise ValueError(f"need 0 <= M <= N, got M={M}, N={N}")
    return KeyBudget(subset_bits=subset_bits(N, M), twirl_bits=2 * M)


def kcr_beta(p: float, delta_p: float) -> float:
    if not 0 < p < 0.75:
        raise ValueError(f"need 0 < p < 3/4, got {p}")
    return 4 * delta_p / (3 - 4 * p)


def kcr(p: float, delta_p: float, N: int | None = None) -> float:
    """Key bits per channel qubit for the twirl-and-hide protocol.

    With ``N=None`` this is the large-N limit h(beta) + 2 beta; with an integer
    ``N`` it is the exact budget for ``M = round(beta N)`` divided by ``N``.
    """
    beta = kcr_beta(p, delta_p)
    if not 0 <= beta < 1:
        raise ValueError(f"beta = {beta} must lie in [0, 1)")
    if N is None:
        return binary_entropy(beta) + 2 * beta
    M = int(math.floor(beta * N + 0.5))
    return key_consumption_p1(N, M).total / N


def key_consumption_p2(N: int, s: float, delta: float) -> KeyBudget:
    if s < 0 or delta < 0 or s - delta < 0:
        raise ValueError("need s >= delta >= 0")
    return KeyBudget(
        twirl_bits=math.ceil(2 * N * (s - delta) - 1e-9),
        representative_bits=math.ceil(N * delta - 1e-9),
    )


class TeleportBudget(NamedTuple):
    ebits: int
    classical_stego_bits: int

    @property
    def pad_free(self) -> bool:
        # teleportation outcomes are already uniformly random
        return True


def ebit_teleport_accounting(n_stego_qubits: int) -> TeleportBudget:
    if n_stego_qubits < 0:
        raise ValueError("qubit count must be non-negative")
    return TeleportBudget(n_stego_qubits, 2 * n_stego_qubits)
