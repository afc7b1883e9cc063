"""Phase-free Pauli strings and single-qubit density-matrix helpers.

A Pauli string on ``n`` qubits is stored in symplectic form as two packed
bitmasks ``x`` and ``z`` (bit ``i`` belongs to qubit ``i``, the leftmost
character of the text literal).  Multiplication ignores global phase, so it is
just XOR of the masks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SYMBOLS = "IXYZ"
# symbol code -> (x bit, z bit); codes follow the order of SYMBOLS
_X_OF_CODE = np.array([0, 1, 1, 0], dtype=np.uint8)
_Z_OF_CODE = np.array([0, 0, 1, 1], dtype=np.uint8)
# (x + 2 z) -> symbol code
_CODE_OF_XZ = np.array([0, 1, 3, 2], dtype=np.uint8)


def _pack(bits: np.ndarray) -> int:
    if bits.size == 0:
        return 0
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _unpack(value: int, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = value.to_bytes((n + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:n]


@dataclass(frozen=True)
class PauliString:
    """An ``n``-qubit Pauli operator modulo phase."""

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("block size must be non-negative")
        if self.x >> self.n or self.z >> self.n or self.x < 0 or self.z < 0:
            raise ValueError(f"bitmask exceeds block size {self.n}")

    # -- construction -----------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        text = text.strip().upper()
        bad = set(text) - set(SYMBOLS)
        if bad:
            raise ValueError(f"invalid Pauli symbols {sorted(bad)!r} in {text!r}")
        codes = np.frombuffer(text.encode("ascii"), dtype=np.uint8)
        lookup = np.zeros(256, dtype=np.uint8)
        for c, s in enumerate(SYMBOLS):
            lookup[ord(s)] = c
        return cls.from_codes(lookup[codes])

    @classmethod
    def from_codes(cls, codes: Sequence[int] | np.ndarray) -> "PauliString":
        codes = np.asarray(codes, dtype=np.uint8)
        if codes.size and codes.max() > 3:
            raise ValueError("symbol codes must lie in 0..3")
        return cls(int(codes.size), _pack(_X_OF_CODE[codes]), _pack(_Z_OF_CODE[codes]))

    @classmethod
    def from_bits(cls, bits: Sequence[int] | np.ndarray) -> "PauliString":
        """Classical bit flips as an X-only string."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size and bits.max() > 1:
            raise ValueError("bits must be 0/1")
        return cls(int(bits.size), _pack(bits), 0)

    @classmethod
    def scatter(cls, n: int, positions: Iterable[int], sub: "PauliString") -> "PauliString":
        """Place ``sub`` on the given ``positions`` of an otherwise identity string."""
        positions = list(positions)
        if len(positions) != sub.n:
            raise ValueError("positions and substring length differ")
        codes = np.zeros(n, dtype=np.uint8)
        if positions:
            codes[np.asarray(positions, dtype=np.intp)] = sub.codes()
        return cls.from_codes(codes)

    # -- views ------------------------------------------------------------
    def codes(self) -> np.ndarray:
        return _CODE_OF_XZ[_unpack(self.x, self.n) + 2 * _unpack(self.z, self.n)]

    def x_bits(self) -> np.ndarray:
        return _unpack(self.x, self.n)

    def z_bits(self) -> np.ndarray:
        return _unpack(self.z, self.n)

    def __str__(self) -> str:
        return "".join(SYMBOLS[c] for c in self.codes())

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})" if self.n <= 64 else f"PauliString(n={self.n}, weight={self.weight})"

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> str:
        if not -self.n <= i < self.n:
            raise IndexError(i)
        i %= self.n
        return SYMBOLS[_CODE_OF_XZ[((self.x >> i) & 1) + 2 * ((self.z >> i) & 1)]]

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def support(self) -> list[int]:
        return np.flatnonzero(_unpack(self.x | self.z, self.n)).tolist()

    def restrict(self, positions: Sequence[int]) -> "PauliString":
        return PauliString.from_codes(self.codes()[np.asarray(positions, dtype=np.intp)])

    def compose(self, other: "PauliString") -> "PauliString":
        return compose(self, other)

    __mul__ = compose


def compose(a: PauliString, b: PauliString) -> PauliString:
    """Symbol-wise product of two Pauli strings with the phase dropped."""
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n}")
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z)


def weight(s: PauliString) -> int:
    return s.weight


# ---------------------------------------------------------------------------
# single-qubit states
# ---------------------------------------------------------------------------
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_MATRICES = (I2, X, Y, Z)


def check_density(rho, atol: float = 1e-12) -> np.ndarray:
    """Return ``rho`` as a 2x2 complex array, raising if it is not a state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def twirl_average(rho) -> np.ndarray:
    """Average ``rho`` over conjugation by I, X, Y and Z."""
    rho = check_density(rho)
    return sum(P @ rho @ P.conj().T for P in PAULI_MATRICES) / 4


def random_density(rng: np.random.Generator) -> np.ndarray:
    """Random mixed state from the Ginibre ensemble (plus occasional pure states)."""
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    if rng.random() < 0.25:
        g[:, 1] = 0
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
