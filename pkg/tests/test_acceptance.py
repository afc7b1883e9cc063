"""Acceptance criteria, one test each, each printing a single PASS/FAIL line.

Run directly with ``python3 tests/test_acceptance.py`` or as part of pytest;
the lines are repeated in the pytest terminal summary.
"""
import itertools
import math
import os
import sys
import time

import numpy as np
import pytest

import conftest
from qstego.adversary import EveExperiment, chi_square_binomial, distinguishing_experiment
from qstego.channels import bsc, error_probability
from qstego.keysource import KeyStream, kcr, key_consumption_p1
from qstego.pauli import PauliString
from qstego.protocol1 import StegoParams1, decode_p1, encode_p1
from qstego.protocol2 import (
    StegoParams2,
    block_error_rate,
    build_noisy_codebook,
    decode_p2,
    encode_p2,
    noisy_rate,
)
from qstego.security import covert_qubit_count, diamond_norm_n, p2_closeness_bound, p2_closeness_tail, p_opt
from qstego.syndrome import build_partition, build_typical_set, partition_capacity, partition_deviation_bound

SEED = 20261016


def record(n: int, ok: bool, text: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {text}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def _rate_pairs():
    rng = np.random.default_rng(SEED)
    pairs = []
    while len(pairs) < 100:
        p, dp = rng.uniform(0, 0.5), rng.uniform(0, 0.5)
        if p + dp < 0.5:
            pairs.append((p, dp))
    return pairs


def test_criterion_1_diamond_closed_forms():
    t0 = time.perf_counter()
    err = 0.0
    for p, dp in _rate_pairs():
        err = max(err, abs(diamond_norm_n(p, p + dp, 1) - 2 * dp))
        err = max(err, abs(diamond_norm_n(p, p + dp, 2) - 2 * dp * (2 - 2 * p - dp)))
    elapsed = time.perf_counter() - t0
    record(1, err <= 1e-12 and elapsed < 1, f"N=1 and N=2 norms over 100 pairs, max error {err:.2e}, {elapsed:.3f} s")


def test_criterion_2_success_probability_chain():
    err = 0.0
    for p, dp in _rate_pairs():
        err = max(err, abs(p_opt(diamond_norm_n(p, p + dp, 1)) - (1 + dp) / 2))
        err = max(err, abs(p_opt(diamond_norm_n(p, p + dp, 2)) - (0.5 + dp * (2 - 2 * p - dp) / 2)))
    record(2, err <= 1e-12, f"p_opt of N=1 and N=2 norms, max error {err:.2e}")


def test_criterion_3_key_consumption_rate():
    t0 = time.perf_counter()
    grid = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
    asym = [kcr(p, 0.01) for p in grid]
    exact = [kcr(p, 0.01, 10_000) for p in grid]
    gap = max(abs(a - e) for a, e in zip(asym, exact))
    monotone = all(b > a for a, b in zip(asym, asym[1:])) and all(b >= a for a, b in zip(exact, exact[1:]))
    elapsed = time.perf_counter() - t0
    record(3, gap < 0.01 and monotone and elapsed < 10, f"max |asymptotic - exact| {gap:.4f} bits, monotone={monotone}, {elapsed:.2f} s")


def test_criterion_4_protocol1_end_to_end():
    t0 = time.perf_counter()
    params = StegoParams1.with_tail(200, 0.15)
    rng = np.random.default_rng(SEED)
    key = KeyStream.from_seed(SEED, 10_000 * 400)
    bob = key.fork()
    closed_form = key_consumption_p1(params.N, params.M).total
    ok = 0
    Qs = []
    key_exact = True
    for _ in range(10_000):
        payload = PauliString.from_codes(rng.integers(0, 4, size=params.M))
        start = key.cursor
        block = encode_p1(payload, key, params, rng)
        audit = block.key_audit
        key_exact &= audit.accepted_bits == closed_form and key.cursor - start == closed_form + audit.rejected_bits + audit.m_bits
        ok += decode_p1(block, bob, params) == payload
        Qs.append(block.Q)
    chi = chi_square_binomial(Qs, params.N, params.mix_rate)
    elapsed = time.perf_counter() - t0
    passed = ok == 10_000 and chi.p_value > 0.01 and key_exact and elapsed < 60
    record(
        4,
        passed,
        f"recovery {ok / 10_000:.4f}, Q chi-square p={chi.p_value:.3f} (dof {chi.dof}), "
        f"key = {closed_form} + rejected + m bits per block: {key_exact}, {elapsed:.1f} s",
    )


def test_criterion_5_protocol2_small_exhaustive():
    t0 = time.perf_counter()
    ch = bsc(0.25)
    params = StegoParams2.build(ch, 12, 0.3)
    part = params.partition
    key = KeyStream.from_seed(SEED, 100_000)
    bob = key.fork()
    roundtrip = all(decode_p2(encode_p2(m, key, params), bob, params) == m for m in range(1 << params.message_bits))

    masses = [0.0] * part.C
    for t in itertools.product((0, 1), repeat=12):
        e = PauliString.from_bits(t)
        j = part.locate(e)
        if j is not None:
            masses[j] += error_probability(ch, e)
    total = math.fsum(masses)
    dev = partition_deviation_bound(0.25, 12, 0.3)
    worst = max(abs(m / total - 1 / part.C) for m in masses)
    rounding = all(abs(m - part.reference_mass()) <= part.mass_deviation_bound(j) + 1e-15 for j, m in enumerate(masses))
    elapsed = time.perf_counter() - t0
    record(
        5,
        roundtrip and worst <= dev and rounding and elapsed < 10,
        f"{part.C} messages roundtrip={roundtrip}, max |mass - 1/C| {worst:.2e} <= {dev:.2e}, {elapsed:.2f} s",
    )


def test_criterion_6_partition_count_lower_bound():
    t0 = time.perf_counter()
    target = partition_capacity(0.1, 64, 0.1).message_bits - math.log2(64)
    counts = {w: build_partition(build_typical_set(bsc(0.1), 64, 0.1, window=w)).log2_C for w in ("relative", "probability")}
    elapsed = time.perf_counter() - t0
    record(
        6,
        all(c >= target for c in counts.values()) and elapsed < 10,
        f"log2 C relative {counts['relative']:.2f}, probability {counts['probability']:.2f} >= {target:.2f}, {elapsed:.2f} s",
    )


def test_criterion_7_syndrome_law_closeness():
    exact = all(abs(p2_closeness_bound(0.1, N, 0.1, 0.01) - 0.01) <= 1e-10 for N in (100, 200, 400))
    tails = [p2_closeness_tail(0.1, N, 0.1) for N in (100, 200, 400)]
    geometric = tails[0] > tails[1] > tails[2] and tails[2] / tails[1] <= tails[1] / tails[0]

    # Both laws are flat on each (weight, inside-a-set) cell, so the distance
    # between them equals the distance between their cell marginals.
    params = StegoParams2.build(bsc(0.1), 64, 0.1, window="relative")
    part = params.partition
    eps = 1 - part.covered_mass()
    bound = p2_closeness_bound(0.1, 64, 0.1, eps)
    stego_in = {c.weight: c.num_sets / part.C for c in part.classes}
    channel_in = {c.weight: c.num_sets * c.set_size * 2.0 ** part.log2_string_probability(c.weight) for c in part.classes}
    channel_class = {w: math.comb(64, w) * 0.1**w * 0.9 ** (64 - w) for w in range(65)}
    n = 20_000
    key = KeyStream.from_seed(SEED, n * 200)
    messages = np.random.default_rng(SEED).integers(0, part.C, n)
    counts = np.bincount([encode_p2(int(m), key, params).channel_error.weight for m in messages], minlength=65)
    tv = 0.5 * math.fsum(
        abs(counts[w] / n - channel_in.get(w, 0.0)) + channel_class[w] - channel_in.get(w, 0.0) for w in range(65)
    )
    sigma = 0.5 * sum(math.sqrt(s * (1 - s) / n) for s in stego_in.values())
    ok = exact and geometric and tv <= bound + 3 * sigma
    record(
        7,
        ok,
        f"bound = eps within 1e-10: {exact}; tails {tails[0]:.2e}, {tails[1]:.2e}, {tails[2]:.2e}; "
        f"N=64 empirical distance {tv:.4f} <= {bound:.4f} + 3 sigma {3 * sigma:.4f}",
    )


def test_criterion_8_covert_scaling():
    ratios = [
        covert_qubit_count(p, 4 * N, eps).qubits / covert_qubit_count(p, N, eps).qubits
        for p in (0.05, 0.1, 0.2)
        for eps in (0.01, 0.1)
        for N in (100, 10_000)
    ]
    worst = max(abs(r - 2) / 2 for r in ratios)
    record(8, worst <= 0.01, f"count ratio under N -> 4N over 12 settings, max relative deviation from 2: {worst:.1e}")


@pytest.mark.slow
def test_criterion_9_adversary_ceiling():
    t0 = time.perf_counter()
    threads = os.cpu_count() or 1
    over, coin = [], True
    root = np.random.SeedSequence(SEED)
    cells = list(itertools.product((0.05, 0.1, 0.2), (0.0, 0.01, 0.05), (10, 100, 1000)))
    for (p, dp, N), seed in zip(cells, root.spawn(len(cells))):
        est = distinguishing_experiment(EveExperiment(p, dp, N), 10_000, seed=seed, threads=threads)
        if not est.within_ceiling:
            over.append(f"(p={p}, dp={dp}, N={N}): {est.empirical_success:.4f} > {est.ceiling:.4f} + {est.ci_halfwidth:.4f}")
        if dp == 0:
            coin &= abs(est.empirical_success - 0.5) <= est.ci_halfwidth
    elapsed = time.perf_counter() - t0
    detail = "; ".join(over) if over else "all cells under ceiling + CI"
    record(9, not over and coin and elapsed < 600, f"27 cells x 10^4 trials, zero-excess cells at 1/2: {coin}; {detail}; {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_10_noisy_codebook():
    target = noisy_rate(0.1, 0.01)
    rng = np.random.default_rng(SEED)
    key = KeyStream.from_seed(SEED, 10_000)
    books = {N: build_noisy_codebook(N, 0.1, 0.01, key) for N in (100, 200, 400)}
    rate = books[200].rate
    errors = [block_error_rate(books[N], 10_000, rng) for N in (100, 200, 400)]
    monotone = errors[0] > errors[1] > errors[2]
    record(
        10,
        rate >= 0.5 * target and monotone,
        f"rate at N=200 {rate:.4f} vs 0.5 R = {0.5 * target:.4f}; block error rates N=100,200,400: "
        + ", ".join(f"{e:.3f}" for e in errors),
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
