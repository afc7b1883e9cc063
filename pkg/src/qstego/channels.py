"""Single-qubit i.i.d. Pauli channels and their decompositions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import stats

from .pauli import PauliString

_TOL = 1e-12


def _xlog2x(w: float) -> float:
    return 0.0 if w <= 0 else w * math.log2(w)


def binary_entropy(p: float) -> float:
    if not 0 <= p <= 1:
        raise ValueError(f"probability out of range: {p}")
    return -_xlog2x(p) - _xlog2x(1 - p)


@dataclass(frozen=True)
class ChannelModel:
    """A Pauli channel given by its per-qubit weights on (I, X, Y, Z).

    ``kind`` records which family the weights came from; ``p`` is the family
    parameter (``None`` for a general Pauli channel).
    """

    kind: str
    weights: tuple[float, float, float, float]
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("bsc", "depolarizing", "pauli"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        w = self.weights
        if len(w) != 4 or min(w) < -_TOL or abs(sum(w) - 1) > _TOL:
            raise ValueError(f"invalid Pauli weights {w}")

    @classmethod
    def bsc(cls, p: float) -> "ChannelModel":
        _check_prob(p)
        return cls("bsc", (1 - p, p, 0.0, 0.0), p)

    @classmethod
    def depolarizing(cls, p: float) -> "ChannelModel":
        _check_prob(p)
        return cls("depolarizing", (1 - p, p / 3, p / 3, p / 3), p)

    @classmethod
    def pauli(cls, p_i: float, p_x: float, p_y: float, p_z: float) -> "ChannelModel":
        return cls("pauli", (p_i, p_x, p_y, p_z), None)

    @classmethod
    def from_config(cls, cfg: Mapping) -> "ChannelModel":
        """Build from ``{"kind": ..., "p": ...}`` or ``{"kind": "pauli", "weights": [...]}``."""
        kind = str(cfg.get("kind", "")).lower()
        if kind in ("bsc", "depolarizing", "dc"):
            if "p" not in cfg:
                raise ValueError(f"channel kind {kind!r} needs 'p'")
            return cls.bsc(float(cfg["p"])) if kind == "bsc" else cls.depolarizing(float(cfg["p"]))
        if kind == "pauli":
            w = cfg.get("weights") or [cfg.get(k) for k in ("p_i", "p_x", "p_y", "p_z")]
            if w is None or len(w) != 4 or any(v is None for v in w):
                raise ValueError("pauli channel needs four weights")
            return cls.pauli(*map(float, w))
        raise ValueError(f"unknown channel kind {cfg.get('kind')!r}")

    def to_config(self) -> dict:
        if self.kind == "pauli":
            return {"kind": "pauli", "weights": list(self.weights)}
        return {"kind": self.kind, "p": self.p}

    @property
    def error_rate(self) -> float:
        """Probability that a symbol is not the identity."""
        if self.p is not None:
            return self.p
        return 1.0 - self.weights[0]

    def require_protocol_regime(self) -> "ChannelModel":
        """Reject rates outside 0 < p < 1/2, the regime the protocols assume."""
        if not 0 < self.error_rate < 0.5:
            raise ValueError(f"protocols need 0 < p < 1/2, got {self.error_rate}")
        return self


def _check_prob(p: float) -> None:
    if not 0 <= p <= 1:
        raise ValueError(f"probability out of range: {p}")


def bsc(p: float) -> ChannelModel:
    return ChannelModel.bsc(p)


def depolarizing(p: float) -> ChannelModel:
    return ChannelModel.depolarizing(p)


@dataclass(frozen=True)
class Decomposition:
    """``p_identity * I + p_twirl * T + p_residual * E`` for a Pauli channel."""

    p_identity: float
    p_twirl: float
    p_residual: float
    residual: ChannelModel

    def __post_init__(self):
        parts = (self.p_identity, self.p_twirl, self.p_residual)
        if min(parts) < -_TOL or max(parts) > 1 + _TOL or abs(sum(parts) - 1) > _TOL:
            raise ValueError(f"invalid decomposition weights {parts}")

    def recompose(self) -> tuple[float, float, float, float]:
        """Per-symbol Pauli weights of the mixture (twirl = uniform over I, X, Y, Z)."""
        t = self.p_twirl / 4
        r = self.residual.weights
        return (
            self.p_identity + t + self.p_residual * r[0],
            t + self.p_residual * r[1],
            t + self.p_residual * r[2],
            t + self.p_residual * r[3],
        )


_NO_RESIDUAL = ChannelModel.pauli(1.0, 0.0, 0.0, 0.0)


def error_probability(ch: ChannelModel, e: PauliString) -> float:
    if e.n < 1:
        raise ValueError("empty error string")
    counts = np.bincount(e.codes(), minlength=4)
    prob = 1.0
    for w, c in zip(ch.weights, counts):
        if c:
            prob *= w ** int(c)
    return prob


def sample_error(ch: ChannelModel, N: int, rng: np.random.Generator) -> PauliString:
    if N < 1:
        raise ValueError("N must be positive")
    cdf = np.cumsum(ch.weights)
    codes = np.searchsorted(cdf, rng.random(N) * cdf[-1], side="right")
    return PauliString.from_codes(np.minimum(codes, 3))


def sample_twirl_frame(ch: ChannelModel, N: int, rng: np.random.Generator) -> tuple[np.ndarray, PauliString]:
    """Draw an error the twirl way: mix each slot w.p. 4p/3, then apply a uniform Pauli.

    Returns the boolean mask of mixed slots together with the resulting error.
    """
    dec = twirl_decompose(ch)
    mixed = rng.random(N) < dec.p_twirl
    codes = np.where(mixed, rng.integers(0, 4, size=N), 0)
    return mixed, PauliString.from_codes(codes)


def twirl_decompose(ch: ChannelModel) -> Decomposition:
    if ch.kind != "depolarizing":
        raise ValueError("twirl decomposition applies to depolarizing channels; use general_decompose")
    p = ch.p
    if p > 0.75 + _TOL:
        raise ValueError(f"p = {p} > 3/4 gives a negative identity weight")
    t = min(4 * p / 3, 1.0)
    return Decomposition(1 - t, t, 0.0, _NO_RESIDUAL)


def general_decompose(ch: ChannelModel) -> Decomposition:
    """Split a Pauli channel into identity, the largest possible twirl, and a residual."""
    p_i, p_x, p_y, p_z = ch.weights
    m = min(p_x, p_y, p_z)
    if m > p_i + _TOL:
        raise ValueError(f"identity weight {p_i} is below the twirl share {m}; no valid split")
    left = [max(w - m, 0.0) for w in (p_x, p_y, p_z)]
    p_res = sum(left)
    if p_res > _TOL:
        residual = ChannelModel.pauli(0.0, *(w / p_res for w in left))
    else:
        p_res, residual = 0.0, _NO_RESIDUAL
    p_twirl = 4 * m
    return Decomposition(max(1 - p_twirl - p_res, 0.0), p_twirl, p_res, residual)


def effective_error_rate(p_physical: float, q_alice: float) -> float:
    """Depolarizing rate seen after composing DC(p_physical) with Alice's DC(q_alice)."""
    for v in (p_physical, q_alice):
        if not 0 <= v <= 0.75:
            raise ValueError(f"rate {v} outside [0, 3/4]")
    return p_physical + q_alice * (1 - 4 * p_physical / 3)


def emulation_rate(p_physical: float, delta_p: float) -> float:
    """Inverse of :func:`effective_error_rate`: the rate Alice adds to reach p + delta_p."""
    return delta_p / (1 - 4 * p_physical / 3)


def channel_entropy(ch: ChannelModel) -> float:
    """Shannon entropy (bits) of the per-symbol error distribution."""
    return -math.fsum(_xlog2x(w) for w in ch.weights)


def weight_distribution(ch: ChannelModel, N: int) -> np.ndarray:
    """Distribution of the number of maximally mixed slots among ``N``."""
    t = twirl_decompose(ch).p_twirl
    return stats.binom.pmf(np.arange(N + 1), N, t)
