import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from qstego.channels import bsc, depolarizing, error_probability
from qstego.keysource import KeyStream
from qstego.pauli import PauliString
from qstego.syndrome import (
    ErrorPartition,
    SteaneCode,
    TypicalSyndromeModel,
    build_partition,
    build_typical_set,
    class_size,
    hamming74_syndrome,
    partition_capacity,
    partition_deviation_bound,
    rank_error,
    replay_representative,
    representative_error,
    unrank_error,
)


# -- Hamming-7 and the 7-qubit code ---------------------------------------------------
def test_hamming_examples():
    assert hamming74_syndrome([0] * 7) == 0
    singles = [hamming74_syndrome(np.eye(7, dtype=int)[i]) for i in range(7)]
    assert sorted(singles) == list(range(1, 8))


@given(st.lists(st.integers(0, 1), min_size=7, max_size=7), st.lists(st.integers(0, 1), min_size=7, max_size=7))
def test_hamming_is_linear(a, b):
    s = hamming74_syndrome(np.bitwise_xor(a, b))
    assert s == hamming74_syndrome(a) ^ hamming74_syndrome(b)


def _single_qubit_errors():
    yield PauliString.identity(7)
    for i in range(7):
        for c in (1, 2, 3):
            codes = np.zeros(7, dtype=np.uint8)
            codes[i] = c
            yield PauliString.from_codes(codes)


def test_steane_syndromes_distinct_and_invertible():
    code = SteaneCode()
    errs = list(_single_qubit_errors())
    syns = [code.syndrome_of(e) for e in errs]
    assert len(set(syns)) == len(errs) == 22
    assert all(code.error_of(s) == e for s, e in zip(syns, errs))
    assert all(code.correctable(e) for e in errs)


def test_steane_corrects_every_single_error():
    code = SteaneCode()
    for logical in range(4):
        block = code.encode(PauliString.from_codes([logical]))
        for e in _single_qubit_errors():
            assert code.decode(block * e).codes().tolist() == [logical]


def test_steane_fails_on_some_double_errors():
    code = SteaneCode()
    block = code.encode(PauliString.from_codes([0]))
    assert code.decode(block * PauliString.from_str("XXIIIII")).codes().tolist() != [0]


# -- weight classes -------------------------------------------------------------------
@given(st.integers(1, 30).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n))), st.sampled_from([1, 3]), st.data())
def test_unrank_rank_error_roundtrip(nw, a, data):
    N, w = nw
    idx = data.draw(st.integers(0, class_size(N, w, a) - 1))
    e = unrank_error(N, w, a, idx)
    assert e.weight == w
    assert rank_error(e, a) == (w, idx)
    if a == 1:
        assert e.z == 0


def test_class_enumeration_is_exhaustive():
    seen = {str(unrank_error(4, 2, 3, i)) for i in range(class_size(4, 2, 3))}
    brute = {"".join(t) for t in itertools.product("IXYZ", repeat=4) if sum(c != "I" for c in t) == 2}
    assert seen == brute


# -- typical sets ---------------------------------------------------------------------
def test_fair_coin_window_is_everything():
    ts = build_typical_set(bsc(0.5), 20, 0.01)
    assert (ts.k_lo, ts.k_hi) == (0, 20)
    assert ts.total_probability == pytest.approx(1.0)


def test_relative_window_mass_matches_binomial_oracle(frozen):
    ts = build_typical_set(bsc(0.1), 100, 0.1, window="relative")
    assert (ts.k_lo, ts.k_hi) == (9, 11)
    assert ts.total_probability == pytest.approx(frozen["bsc0.1_N100_window9_11_mass"], rel=1e-12)


def test_window_collapses_to_mean():
    ts = build_typical_set(bsc(0.1), 10, 0.05, window="relative")
    assert (ts.k_lo, ts.k_hi) == (1, 1)


def test_empty_window_rejected_with_diagnostic():
    with pytest.raises(ValueError, match="empty typical window"):
        build_typical_set(bsc(0.1), 16, 0.1, window="relative")


@pytest.mark.parametrize("ch", [bsc(0.1), bsc(0.3), depolarizing(0.1)])
def test_probability_window_members_obey_bounds(ch):
    ts = build_typical_set(ch, 40, 0.15)
    lo, hi = ts.probability_bounds()
    for w in ts.weights:
        assert lo * (1 - 1e-9) <= 2.0 ** ts.log2_string_probability(w) <= hi * (1 + 1e-9)
    outside = [w for w in range(41) if w not in ts.weights]
    assert all(not lo <= 2.0 ** ts.log2_string_probability(w) <= hi for w in outside)


@given(st.integers(4, 30), st.data())
def test_typical_syndrome_model_roundtrip(N, data):
    ts = build_typical_set(depolarizing(0.2), N, 0.9)
    model = TypicalSyndromeModel(ts)
    codes = data.draw(st.lists(st.integers(0, 3), min_size=N, max_size=N))
    e = PauliString.from_codes(codes)
    assert model.error_of(model.syndrome_of(e)) == e
    assert model.correctable(e) == (ts.k_lo <= e.weight <= ts.k_hi)


# -- partitions -----------------------------------------------------------------------
def _exhaustive_check(ch, N, delta, window="probability", max_sets=None):
    """Enumerate every string, locate it, and compare set masses with the bounds."""
    ts = build_typical_set(ch, N, delta, window=window)
    part = build_partition(ts, max_sets=max_sets)
    symbols = "IX" if ch.kind == "bsc" else "IXYZ"
    members = {j: [] for j in range(part.C)}
    for t in itertools.product(symbols, repeat=N):
        e = PauliString.from_str("".join(t))
        j = part.locate(e)
        if j is not None:
            assert ts.contains(e)
            members[j].append(e)
    for j, got in members.items():
        assert sorted(map(str, got)) == sorted(map(str, part.members(j)))
        mass = math.fsum(error_probability(ch, e) for e in got)
        assert mass == pytest.approx(part.set_mass(j), rel=1e-12)
        assert abs(mass - part.reference_mass()) <= part.mass_deviation_bound(j) + 1e-12 * part.reference_mass()
    return ts, part, members


def test_exhaustive_partition_n4_all_weights():
    ts, part, members = _exhaustive_check(bsc(0.25), 4, 1.2)
    assert (ts.k_lo, ts.k_hi) == (0, 4)
    total = math.fsum(part.set_mass(j) for j in range(part.C))
    for j in range(part.C):
        # x = 3 exactly at p = 1/4, so every set has the same mass
        assert part.set_mass(j) / total == pytest.approx(1 / part.C, abs=partition_deviation_bound(0.25, 4, 1.2))


@pytest.mark.parametrize(
    "ch,N,delta",
    [(bsc(0.25), 12, 0.3), (bsc(0.1), 12, 0.5), (bsc(0.3), 10, 0.4), (bsc(0.2), 11, 0.3), (depolarizing(0.25), 5, 0.6)],
)
def test_exhaustive_partitions(ch, N, delta):
    _exhaustive_check(ch, N, delta)


def test_exhaustive_truncated_partition():
    ts, part, _ = _exhaustive_check(bsc(0.25), 12, 0.3, max_sets=64)
    assert part.C == 64


def test_single_weight_window_sets_are_equal_size():
    ts = build_typical_set(bsc(0.1), 10, 0.05, window="relative")
    part = build_partition(ts)
    assert {part.set_size(j) for j in range(part.C)} == {1}
    assert part.C == 10


@given(st.floats(0.03, 0.45), st.integers(8, 60), st.floats(0.1, 0.6))
def test_set_masses_within_rounding_bound(p, N, delta):
    try:
        ts = build_typical_set(bsc(p), N, delta)
    except ValueError:
        return
    part = build_partition(ts)
    ref = part.reference_mass()
    for c in part.classes:
        P = 2.0 ** part.log2_string_probability(c.weight)
        assert abs(c.set_size * P - ref) <= 0.5 * P + 1e-12 * ref


@pytest.mark.parametrize("ch", [bsc(0.05), bsc(0.1), bsc(0.2), bsc(0.3), bsc(0.4), depolarizing(0.1), depolarizing(0.2)])
@pytest.mark.parametrize("N", [8, 16, 32, 48, 64])
@pytest.mark.parametrize("window", ["relative", "probability"])
def test_set_count_within_factor_two_of_mass_count(ch, N, window):
    for delta in (0.1, 0.2, 0.3):
        try:
            ts = build_typical_set(ch, N, delta, window=window)
        except ValueError:
            continue
        part = build_partition(ts)
        ratio = ts.total_probability / part.reference_mass() / part.C
        assert 0.5 <= ratio <= 2


def test_closed_form_capacity_within_factor_two_at_64():
    part = build_partition(build_typical_set(bsc(0.1), 64, 0.1, window="relative"))
    assert abs(part.log2_C - partition_capacity(0.1, 64, 0.1).log2_C) <= 1


def test_capacity_lower_bound_at_64():
    part = build_partition(build_typical_set(bsc(0.1), 64, 0.1, window="relative"))
    assert part.log2_C >= partition_capacity(0.1, 64, 0.1).message_bits - math.log2(64)


def test_partition_capacity_examples(frozen):
    assert partition_capacity(0.1, 100, 0.1).message_bits == pytest.approx(
        frozen["message_bits_p0.1_N100_d0.1"], rel=1e-12
    )
    p = 0.1
    d_zero = frozen["h_0.1"] / (p * math.log2(9))
    assert partition_capacity(p, 100, d_zero).message_bits == pytest.approx(0, abs=1e-9)
    assert partition_capacity(p, 1000, 1e-9).message_bits == pytest.approx(1000 * frozen["h_0.1"], rel=1e-6)
    # log2 C and the message length are the same quantity
    cap = partition_capacity(0.2, 80, 0.15)
    assert cap.log2_C == pytest.approx(cap.message_bits, rel=1e-12)


def test_deviation_bound_examples(frozen):
    assert partition_deviation_bound(0.1, 100, 0.1, k=10) == pytest.approx(frozen["deviation_bound_p0.1_N100_k10"], rel=1e-10)
    assert partition_deviation_bound(1e-6, 100, 0.1, k=1) < 1e-10
    vals = [partition_deviation_bound(0.1, N, 0.1) for N in range(20, 400, 20)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        partition_deviation_bound(0.5, 100, 0.1)


def test_large_partition_is_intensional():
    ts = build_typical_set(bsc(0.1), 1000, 0.1, window="relative")
    part = build_partition(ts)
    assert part.log2_C > 400
    j = part.C // 3
    e = part.member(j, part.set_size(j) - 1)
    assert part.locate(e) == j


def test_partition_json_roundtrip():
    part = build_partition(build_typical_set(depolarizing(0.1), 64, 0.1))
    text = part.to_json()
    again = ErrorPartition.from_json(text)
    assert again == part and again.to_json() == text
    with pytest.raises(ValueError):
        ErrorPartition.from_json(text.replace(f'"C":"{part.C}"', '"C":"1"'))


# -- representatives ------------------------------------------------------------------
def test_representative_of_singleton_costs_nothing():
    part = build_partition(build_typical_set(bsc(0.1), 10, 0.05, window="relative"))
    key = KeyStream.from_bitstring("")
    e, bits = representative_error(part, 3, key)
    assert bits == 0 and e == part.member(3, 0)


def test_representative_of_eight_member_set_uniform():
    # at p = 1/3 the per-string ratio is exactly 2, so sets three weights away hold 8 strings
    part = build_partition(build_typical_set(bsc(1 / 3), 12, 1.0))
    j = next(j for j in range(part.C) if part.set_size(j) == 8)
    key = KeyStream.from_seed(4, 3 * 8000)
    hits = Counter()
    for _ in range(8000):
        start = key.cursor
        e, bits = representative_error(part, j, key)
        assert bits == key.cursor - start == 3
        hits[str(e)] += 1
    assert set(hits) == {str(m) for m in part.members(j)}
    assert stats.chisquare(list(hits.values())).pvalue > 1e-3


def test_representative_is_deterministic_and_replayable():
    part = build_partition(build_typical_set(depolarizing(0.1), 64, 0.1))
    j = part.C - 1
    a, b, c = (KeyStream.from_seed(5, 500) for _ in range(3))
    ea, _ = representative_error(part, j, a)
    eb, _ = representative_error(part, j, b)
    replay_representative(part, j, c)
    assert ea == eb and a.cursor == b.cursor == c.cursor
