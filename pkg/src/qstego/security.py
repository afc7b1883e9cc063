"""Closed-form distinguishability of N uses of BSC(p) versus BSC(r) (equally DC(p) vs DC(r))."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats


class RegimeWarning(UserWarning):
    """Rates outside 0 <= p < 1/2 were accepted in raw mode."""


def diamond_norm_n(p: float, r: float, N: int, *, raw: bool = False) -> float:
    """``sum_j C(N,j) |r^j (1-r)^(N-j) - p^j (1-p)^(N-j)|``.

    Each term is a difference of binomial pmfs evaluated from log-pmfs, and the
    terms are added with ``math.fsum``.  Outside ``[0, 1/2)`` a ValueError is
    raised unless ``raw=True``, which only warns.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    for v in (p, r):
        if not 0 <= v <= 1:
            raise ValueError(f"probability out of range: {v}")
        if not v < 0.5:
            if not raw:
                raise ValueError(f"rate {v} outside the protocol regime [0, 1/2)")
            warnings.warn(f"rate {v} outside [0, 1/2)", RegimeWarning, stacklevel=2)
    if p == r:
        return 0.0
    j = np.arange(N + 1)
    diff = np.abs(np.exp(stats.binom.logpmf(j, N, r)) - np.exp(stats.binom.logpmf(j, N, p)))
    return min(2.0, math.fsum(diff.tolist()))


def p_opt(diamond: float) -> float:
    """Best single-shot success probability for telling two channels apart."""
    if not -1e-12 <= diamond <= 2 + 1e-12:
        raise ValueError(f"diamond norm {diamond} outside [0, 2]")
    return 0.5 + min(max(diamond, 0.0), 2.0) / 4


def max_covert_delta(p: float, N: int, eps: float) -> float:
    """Largest excess rate ``eps sqrt(p(1-p)/N)`` that keeps the norm of order ``eps``."""
    if not 0 < p < 1:
        raise ValueError("need 0 < p < 1")
    if N < 1:
        raise ValueError("N must be at least 1")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return eps * math.sqrt(p * (1 - p) / N)


class CovertCount(NamedTuple):
    qubits: float
    delta_p: float
    delta: float


def covert_qubit_count(p: float, N: int, eps: float, delta: float = 0.0) -> CovertCount:
    """Payload slots ``(4/3) delta_p N (1 - delta)`` at the covert excess rate."""
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    dp = max_covert_delta(p, N, eps)
    return CovertCount(4 / 3 * dp * N * (1 - delta), dp, delta)


def p2_closeness_tail(p: float, N: int, delta: float) -> float:
    """``((1-p)/(1-2p)) (p/(1-p))^(Np(1-delta)) ((1-2p+2p^2)/(1-p))^N``."""
    if not 0 < p < 0.5:
        raise ValueError("bound needs 0 < p < 1/2")
    if N < 1:
        raise ValueError("N must be at least 1")
    lg = (
        math.log((1 - p) / (1 - 2 * p))
        + N * p * (1 - delta) * math.log(p / (1 - p))
        + N * math.log((1 - 2 * p + 2 * p * p) / (1 - p))
    )
    return math.exp(lg)


def p2_closeness_bound(p: float, N: int, delta: float, eps: float) -> float:
    """Distance between the stego syndrome law and the channel's, at most ``eps`` plus a tail."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return eps + p2_closeness_tail(p, N, delta)


@dataclass(frozen=True)
class SecurityReport:
    N: int
    p: float
    r: float
    diamond_norm: float
    p_opt: float

    def __post_init__(self):
        if not 0 <= self.diamond_norm <= 2:
            raise ValueError("diamond norm outside [0, 2]")
        if abs(self.p_opt - (0.5 + self.diamond_norm / 4)) > 1e-12:
            raise ValueError("p_opt inconsistent with diamond norm")

    @property
    def delta_p(self) -> float:
        return self.r - self.p

    @classmethod
    def evaluate(cls, p: float, delta_p: float, N: int) -> "SecurityReport":
        d = diamond_norm_n(p, p + delta_p, N)
        return cls(N, p, p + delta_p, d, p_opt(d))
