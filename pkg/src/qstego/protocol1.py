"""Hide stego symbols as maximally mixed slots of an N-slot codeword.

Everything is tracked in the Pauli frame: a stego slot carries
``payload_symbol * pad_symbol`` and a decoy slot carries a uniformly random
Pauli, which is what a maximally mixed qubit looks like to anyone without the
key.  The frame is the error a syndrome measurement would reveal.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .channels import binary_entropy, depolarizing, sample_error
from .keysource import UNIFORM_BITS, KeyStream, key_consumption_p1, select_subset, twirl_pad
from .pauli import PauliString, compose
from .syndrome import SteaneCode, SyndromeModel


class AdmissibilityWarning(UserWarning):
    """delta outside the asymptotic guidance 1 >> delta >> sqrt((1-4p/3)/(4pN/3))."""


@dataclass(frozen=True)
class StegoParams1:
    N: int
    p_emulated: float
    delta: float
    p_physical: float = 0.0
    inner_code: SteaneCode | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if not 0 <= self.p_emulated <= 0.75:
            raise ValueError(f"emulated rate {self.p_emulated} outside [0, 3/4]")
        if not 0 <= self.p_physical <= 0.75:
            raise ValueError(f"physical rate {self.p_physical} outside [0, 3/4]")
        if not 0 <= self.delta <= 1:
            raise ValueError("delta must lie in [0, 1]")
        if self.M > self.N:
            raise ValueError(f"M = {self.M} exceeds N = {self.N}")
        if self.p_emulated > 0 and not self.delta_lower < self.delta < 0.5:
            warnings.warn(
                f"delta = {self.delta:.4g} outside ({self.delta_lower:.4g}, 0.5); "
                "the chance of fewer than M mixed slots may not be negligible",
                AdmissibilityWarning,
                stacklevel=3,
            )

    @property
    def mix_rate(self) -> float:
        return 4 * self.p_emulated / 3

    @property
    def M(self) -> int:
        return int(math.floor(self.mix_rate * self.N * (1 - self.delta) + 0.5))

    @property
    def delta_lower(self) -> float:
        t = self.mix_rate
        return math.sqrt((1 - t) / (t * self.N)) if t > 0 else 0.0

    @property
    def logical_capacity(self) -> int:
        """Stego symbols carried per block once the inner code is applied."""
        return self.M // 7 if self.inner_code is not None else self.M

    @classmethod
    def with_tail(cls, N: int, p_emulated: float, tail: float = 1e-4, **kw) -> "StegoParams1":
        """Largest ``M`` with ``P(Q < M) <= tail``; delta follows from ``M``."""
        t = 4 * p_emulated / 3
        if t == 0:
            return cls(N, p_emulated, 0.0, **kw)
        cdf = stats.binom.cdf(np.arange(N + 1), N, t)
        # cdf[M - 1] = P(Q < M)
        ok = np.flatnonzero(cdf <= tail)
        M = int(ok[-1]) + 1 if ok.size else 0
        delta = 1 - M / (t * N)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AdmissibilityWarning)
            return cls(N, p_emulated, delta, **kw)


@dataclass(frozen=True)
class KeyAudit:
    subset_bits: int = 0
    rejected_bits: int = 0
    pad_bits: int = 0
    m_bits: int = 0

    @property
    def accepted_bits(self) -> int:
        """Bits spent on the subset and pad themselves (the closed-form budget)."""
        return self.subset_bits + self.pad_bits

    @property
    def total(self) -> int:
        return self.subset_bits + self.rejected_bits + self.pad_bits + self.m_bits


@dataclass(frozen=True)
class TransmittedBlock:
    N: int
    payload_slots: tuple[int, ...]
    pad: PauliString
    decoy_mixed_slots: tuple[int, ...]
    channel_error: PauliString
    physical_error: PauliString
    key_audit: KeyAudit = field(default_factory=KeyAudit)

    @property
    def Q(self) -> int:
        return len(self.payload_slots) + len(self.decoy_mixed_slots)

    @property
    def M(self) -> int:
        return len(self.payload_slots)


@lru_cache(maxsize=256)
def _conditional_mixed_cdf(N: int, t: float, M: int) -> np.ndarray:
    """CDF of Q given Q >= M under Binomial(N, t), over Q = M..N."""
    pmf = stats.binom.pmf(np.arange(M, N + 1), N, t)
    if pmf.sum() == 0:
        raise ValueError(f"P(Q >= {M}) underflows for N={N}, t={t}")
    cdf = np.cumsum(pmf / pmf.sum())
    cdf[-1] = 1.0
    return cdf


def _draw_mixed_count(key: KeyStream, params: StegoParams1) -> int:
    u = key.draw_uniform()
    if params.mix_rate == 0:
        return 0
    cdf = _conditional_mixed_cdf(params.N, params.mix_rate, params.M)
    return params.M + int(np.searchsorted(cdf, u, side="right"))


def encode_p1(payload: PauliString, key: KeyStream, params: StegoParams1, rng: np.random.Generator) -> TransmittedBlock:
    """Swap ``payload`` into a keyed subset, twirl it, and add decoy mixed slots."""
    N, M = params.N, params.M
    if payload.n != M:
        raise ValueError(f"payload has {payload.n} symbols, block carries M = {M}")
    draw = select_subset(key, N, M)
    start = key.cursor
    pad = twirl_pad(key, M)
    pad_bits = key.cursor - start
    start = key.cursor
    Q = _draw_mixed_count(key, params)
    m_bits = key.cursor - start

    codes = np.zeros(N, dtype=np.uint8)
    slots = np.asarray(draw.subset, dtype=np.intp)
    codes[slots] = compose(payload, pad).codes()
    free = np.setdiff1d(np.arange(N), slots, assume_unique=True)
    decoys = np.sort(rng.choice(free, size=Q - M, replace=False)) if Q > M else np.zeros(0, np.intp)
    codes[decoys] = rng.integers(0, 4, size=decoys.size)

    audit = KeyAudit(draw.bits, draw.rejected_bits, pad_bits, m_bits)
    return TransmittedBlock(
        N,
        tuple(draw.subset),
        pad,
        tuple(int(i) for i in decoys),
        PauliString.from_codes(codes),
        PauliString.identity(N),
        audit,
    )


def transmit(block: TransmittedBlock, p_physical: float, rng: np.random.Generator) -> TransmittedBlock:
    """Pass ``block`` through a physical depolarizing channel."""
    if p_physical == 0:
        return block
    err = sample_error(depolarizing(p_physical), block.N, rng)
    return TransmittedBlock(
        block.N,
        block.payload_slots,
        block.pad,
        block.decoy_mixed_slots,
        compose(block.channel_error, err),
        compose(block.physical_error, err),
        block.key_audit,
    )


def encode_p1_noisy(
    payload_logical: PauliString, key: KeyStream, params: StegoParams1, rng: np.random.Generator
) -> TransmittedBlock:
    """Protect ``k_s`` logical symbols with the inner code, hide them, then transmit."""
    code = params.inner_code
    if code is None:
        raise ValueError("noisy variant needs an inner code")
    k_s = payload_logical.n
    if 7 * k_s > params.M:
        raise ValueError(f"{k_s} logical symbols need {7 * k_s} slots, block has M = {params.M}")
    encoded = code.encode(payload_logical)
    filler = np.zeros(params.M - encoded.n, dtype=np.uint8)
    payload = PauliString.from_codes(np.concatenate([encoded.codes(), filler]))
    return transmit(encode_p1(payload, key, params, rng), params.p_physical, rng)


def decode_p1(block: TransmittedBlock, key: KeyStream, params: StegoParams1) -> PauliString:
    """Bob's side: rebuild subset and pad from the key and strip the pad."""
    draw = select_subset(key, params.N, params.M)
    pad = twirl_pad(key, params.M)
    key.draw_bits(UNIFORM_BITS)  # keep in step with the encoder's mixed-count draw
    received = compose(block.channel_error.restrict(draw.subset), pad)
    if params.inner_code is None:
        return received
    k_s = params.logical_capacity
    return params.inner_code.decode(received.restrict(range(7 * k_s)))


@dataclass(frozen=True)
class EveRecord:
    """What a channel monitor without the key can learn from one block."""

    N: int
    Q: int
    weight: int
    syndrome: int | None
    padded_slot_marginal: tuple[float, float, float, float]


def eve_view(block: TransmittedBlock, code: SyndromeModel | None = None) -> EveRecord:
    # Marginal of a stego slot averaged over the four equally likely pad
    # symbols.  With codes I=0, X=1, Y=2, Z=3 the phase-free product is XOR.
    counts = np.zeros(4)
    if block.M:
        pre_pad = compose(block.channel_error.restrict(block.payload_slots), block.pad).codes()
        for pad_code in range(4):
            counts += np.bincount(pre_pad ^ pad_code, minlength=4)
        counts /= counts.sum()
    else:
        counts[:] = 0.25
    syndrome = code.syndrome_of(block.channel_error) if code is not None else None
    return EveRecord(block.N, block.Q, block.channel_error.weight, syndrome, tuple(float(c) for c in counts))


def block_record(block: TransmittedBlock, index: int, reveal: bool = False, code: SyndromeModel | None = None) -> dict:
    """One JSON-lines trace record; hidden fields only with ``reveal``."""
    view = eve_view(block, code)
    rec = {"block": index, "N": block.N, "Q": view.Q, "weight": view.weight}
    if view.syndrome is not None:
        rec["syndrome"] = view.syndrome
    if reveal:
        rec.update(
            payload_slots=list(block.payload_slots),
            pad=str(block.pad),
            decoy_mixed_slots=list(block.decoy_mixed_slots),
            channel_error=str(block.channel_error),
            key_bits=block.key_audit.total,
        )
    return rec


# ---------------------------------------------------------------------------
# reference rates for the BSC version of the noisy variant
# ---------------------------------------------------------------------------
def bsc_rate_main(p: float, delta_p: float, delta: float) -> float:
    """(1 - delta)(1 - h(p)) delta_p / (1 - 2p)."""
    return (1 - delta) * (1 - binary_entropy(p)) * delta_p / (1 - 2 * p)


def bsc_rate_encoding1(p: float, delta_p: float) -> float:
    """2 delta_p (1 - h(p)) / (1 - 2p)."""
    return 2 * delta_p * (1 - binary_entropy(p)) / (1 - 2 * p)


def inner_rate(params: StegoParams1) -> float:
    return params.logical_capacity / params.N


def predicted_key_bits(params: StegoParams1) -> int:
    return key_consumption_p1(params.N, params.M).total
