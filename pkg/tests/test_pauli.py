import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qstego.pauli import (
    PAULI_MATRICES,
    PauliString,
    check_density,
    compose,
    random_density,
    twirl_average,
    weight,
)

pauli_text = st.text(alphabet="IXYZ", min_size=1, max_size=40)


def same_length_pair():
    return st.integers(1, 40).flatmap(
        lambda n: st.tuples(*(st.text(alphabet="IXYZ", min_size=n, max_size=n) for _ in range(3)))
    )


def test_compose_examples():
    assert str(compose(PauliString.from_str("XI"), PauliString.from_str("ZI"))) == "YI"
    assert str(PauliString.from_str("XYZ") * PauliString.from_str("XYZ")) == "III"
    assert str(PauliString.from_str("IXYZ") * PauliString.from_str("ZZZZ")) == "ZYXI"


def test_weight_examples():
    assert weight(PauliString.from_str("IXYZ")) == 3
    assert PauliString.identity(10).weight == 0
    assert PauliString.from_str("YYYY").weight == 4


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        compose(PauliString.from_str("XX"), PauliString.from_str("X"))


def test_bad_symbol_rejected():
    with pytest.raises(ValueError):
        PauliString.from_str("XQ")


@given(pauli_text)
def test_text_roundtrip(text):
    s = PauliString.from_str(text)
    assert str(s) == text
    assert PauliString.from_codes(s.codes()) == s
    assert [s[i] for i in range(len(text))] == list(text)


@given(same_length_pair())
def test_group_laws(triple):
    a, b, c = (PauliString.from_str(t) for t in triple)
    assert compose(compose(a, b), c) == compose(a, compose(b, c))
    assert compose(a, b) == compose(b, a)
    assert compose(a, a) == PauliString.identity(a.n)
    assert weight(compose(a, b)) <= weight(a) + weight(b)


@given(same_length_pair())
def test_symbolwise_product_matches_matrices(triple):
    a, b, _ = (PauliString.from_str(t) for t in triple)
    prod = compose(a, b).codes()
    for i, (x, y) in enumerate(zip(a.codes(), b.codes())):
        m = PAULI_MATRICES[x] @ PAULI_MATRICES[y]
        target = PAULI_MATRICES[prod[i]]
        # equal up to a global phase
        k = np.flatnonzero(np.abs(target.ravel()) > 0)[0]
        phase = m.ravel()[k] / target.ravel()[k]
        assert np.allclose(m, phase * target)


def test_support_restrict_scatter():
    s = PauliString.from_str("IXIZY")
    assert s.support() == [1, 3, 4]
    assert str(s.restrict([4, 1])) == "YX"
    assert str(PauliString.scatter(5, [0, 2], PauliString.from_str("ZY"))) == "ZIYII"
    assert PauliString.from_bits([1, 0, 1]) == PauliString.from_str("XIX")


def test_twirl_of_basis_states():
    for rho in (np.diag([1, 0]), np.diag([0, 1]), np.full((2, 2), 0.5)):
        assert np.allclose(twirl_average(rho), np.eye(2) / 2, atol=1e-15)


def test_twirl_of_random_states(rng):
    for _ in range(200):
        rho = random_density(rng)
        assert np.allclose(twirl_average(rho), np.eye(2) / 2, atol=1e-12)


def test_invalid_density_rejected():
    with pytest.raises(ValueError):
        check_density(np.diag([0.7, 0.7]))
    with pytest.raises(ValueError):
        check_density(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        check_density(np.diag([1.5, -0.5]))
