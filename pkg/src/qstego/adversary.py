"""A passive channel monitor: likelihood-ratio tests on block weights, and a
Monte-Carlo harness comparing its success rate with the diamond-norm ceiling."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Literal, Sequence

import numpy as np
from scipy import stats

from .channels import depolarizing, emulation_rate, sample_error
from .keysource import KeyStream, subset_bits
from .pauli import PauliString
from .protocol1 import AdmissibilityWarning, EveRecord, StegoParams1, encode_p1, transmit
from .security import diamond_norm_n, p_opt

Decision = Literal["honest", "stego"]
CHUNK_TRIALS = 500


@dataclass(frozen=True)
class Observation:
    """Key-independent data from one block."""

    N: int
    weight: int
    syndrome: int | None = None
    block_index: int = 0

    @classmethod
    def from_view(cls, view: EveRecord, block_index: int = 0) -> "Observation":
        return cls(view.N, view.weight, view.syndrome, block_index)


def log_likelihood_ratio(obs: Sequence[Observation], p: float, r: float) -> float:
    """``sum_i log(Bin(w_i; N_i, r) / Bin(w_i; N_i, p))``; binomial coefficients cancel."""
    if not (0 < p < 1 and 0 < r < 1):
        raise ValueError("rates must lie strictly between 0 and 1")
    up, down = math.log(r / p), math.log((1 - r) / (1 - p))
    return math.fsum(o.weight * up + (o.N - o.weight) * down for o in obs)


def likelihood_ratio_decide(obs: Sequence[Observation], p: float, r: float) -> Decision:
    """Pick the likelier rate; ties (including ``p == r``) go to honest."""
    if not obs:
        raise ValueError("need at least one observation")
    if p == r:
        return "honest"
    return "stego" if log_likelihood_ratio(obs, p, r) > 0 else "honest"


@dataclass(frozen=True)
class EveExperiment:
    """Honest channel DC(p) versus DC(p) plus a Protocol 1 frame lifting the rate to ``p + delta_p``."""

    p: float
    delta_p: float
    N: int
    blocks: int = 1
    tail: float = 1e-4

    def __post_init__(self):
        if not 0 < self.p < 0.5 or not 0 <= self.delta_p or not self.p + self.delta_p < 0.5:
            raise ValueError("need 0 < p <= p + delta_p < 1/2")
        if self.N < 1 or self.blocks < 1:
            raise ValueError("N and blocks must be positive")

    @property
    def r(self) -> float:
        return self.p + self.delta_p

    def stego_params(self) -> StegoParams1:
        q = emulation_rate(self.p, self.delta_p)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AdmissibilityWarning)
            return StegoParams1.with_tail(self.N, q, tail=self.tail, p_physical=self.p)

    def ceiling(self) -> float:
        return p_opt(diamond_norm_n(self.p, self.r, self.N * self.blocks))


@dataclass(frozen=True)
class AdvantageEstimate:
    empirical_success: float
    trials: int
    ci_halfwidth: float
    ceiling: float
    p: float
    delta_p: float
    N: int
    blocks: int
    prior: str = "balanced honest/stego labels"

    @property
    def within_ceiling(self) -> bool:
        return self.empirical_success <= self.ceiling + self.ci_halfwidth

    def as_row(self) -> dict:
        return asdict(self)


def _honest_trial(exp: EveExperiment, rng: np.random.Generator) -> list[Observation]:
    ch = depolarizing(exp.p)
    return [Observation(exp.N, sample_error(ch, exp.N, rng).weight, None, b) for b in range(exp.blocks)]


def _stego_trial(exp: EveExperiment, params: StegoParams1, key: KeyStream, rng: np.random.Generator) -> list[Observation]:
    out = []
    for b in range(exp.blocks):
        payload = PauliString.from_codes(rng.integers(0, 4, size=params.M))
        block = transmit(encode_p1(payload, key, params, rng), exp.p, rng)
        out.append(Observation(exp.N, block.channel_error.weight, None, b))
    return out


def _run_chunk(exp: EveExperiment, labels: np.ndarray, seed: np.random.SeedSequence) -> int:
    """Number of correct decisions on one chunk of trials."""
    rng_seed, key_seed = seed.spawn(2)
    rng = np.random.default_rng(rng_seed)
    params = exp.stego_params()
    per_block = 3 * subset_bits(exp.N, params.M) + 2 * params.M + 53
    key = KeyStream.from_seed(int(key_seed.generate_state(1, np.uint64)[0]), int(labels.sum()) * exp.blocks * per_block + 1024)
    correct = 0
    for is_stego in labels:
        obs = _stego_trial(exp, params, key, rng) if is_stego else _honest_trial(exp, rng)
        guess = likelihood_ratio_decide(obs, exp.p, exp.r)
        correct += (guess == "stego") == bool(is_stego)
    return correct


def distinguishing_experiment(
    exp: EveExperiment, trials: int, seed: int | np.random.SeedSequence = 0, threads: int = 1
) -> AdvantageEstimate:
    """Success rate of the likelihood-ratio monitor over ``trials`` labelled trials.

    Half the trials (rounded down) are honest, in shuffled order.  Work is split
    into fixed chunks with their own seed streams, so results do not depend on
    ``threads``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    label_seed, work_seed = root.spawn(2)
    labels = np.zeros(trials, dtype=bool)
    labels[trials // 2 :] = True
    np.random.default_rng(label_seed).shuffle(labels)
    n_chunks = math.ceil(trials / CHUNK_TRIALS)
    chunks = [labels[i * CHUNK_TRIALS : (i + 1) * CHUNK_TRIALS] for i in range(n_chunks)]
    seeds = work_seed.spawn(n_chunks)
    if threads > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            correct = sum(pool.map(_run_chunk, [exp] * n_chunks, chunks, seeds))
    else:
        correct = sum(_run_chunk(exp, c, s) for c, s in zip(chunks, seeds))
    success = correct / trials
    ci = 1.96 * math.sqrt(success * (1 - success) / trials)
    return AdvantageEstimate(success, trials, ci, exp.ceiling(), exp.p, exp.delta_p, exp.N, exp.blocks)


# ---------------------------------------------------------------------------
# goodness of fit for observed counts
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ChiSquare:
    statistic: float
    dof: int
    p_value: float


def chi_square_binomial(samples: Sequence[int], N: int, t: float, min_expected: float = 5.0) -> ChiSquare:
    """Pearson test of integer samples against Binomial(N, t).

    Adjacent outcomes are pooled, from both tails inward, until every bin expects
    at least ``min_expected`` counts.
    """
    samples = np.asarray(samples, dtype=np.int64)
    n = samples.size
    if n == 0:
        raise ValueError("no samples")
    observed = np.bincount(samples, minlength=N + 1).astype(float)
    expected = n * stats.binom.pmf(np.arange(N + 1), N, t)
    bins_o, bins_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
            acc_o = acc_e = 0.0
    if bins_e:
        bins_o[-1] += acc_o
        bins_e[-1] += acc_e
    else:
        return ChiSquare(0.0, 0, 1.0)
    o, e = np.array(bins_o), np.array(bins_e)
    stat = float(((o - e) ** 2 / e).sum())
    dof = len(e) - 1
    pval = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return ChiSquare(stat, dof, pval)
