"""Pauli operators in the symplectic binary picture, plus GF(2) linear algebra.

Supports are stored as Python ints used as bit-vectors (bit ``i`` is qubit
``i``), so composition is a XOR and the symplectic form is a popcount.
Phases are dropped throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import UsageError


def _bits_from_array(bits) -> int:
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size == 0:
        return 0
    # little-endian bit order so that bit i of the int is arr[i]
    packed = np.packbits(arr, bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def _array_from_bits(value: int, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    raw = np.frombuffer(value.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def _indices(value: int) -> list[int]:
    out = []
    i = 0
    while value:
        if value & 1:
            out.append(i)
        value >>= 1
        i += 1
    return out


@dataclass(frozen=True)
class PauliOperator:
    """A Pauli operator on ``n`` qubits with X and Z supports as bit masks.

    X is (1, 0), Z is (0, 1) and Y is (1, 1).
    """

    n: int
    x: int = 0
    z: int = 0

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str) -> "PauliOperator":
        if not 0 <= qubit < n:
            raise UsageError(f"qubit {qubit} out of range for {n} qubits")
        bit = 1 << qubit
        kind = kind.upper()
        if kind == "X":
            return cls(n, bit, 0)
        if kind == "Z":
            return cls(n, 0, bit)
        if kind == "Y":
            return cls(n, bit, bit)
        if kind == "I":
            return cls(n)
        raise UsageError(f"unknown Pauli {kind!r}")

    @classmethod
    def from_faces(cls, n: int, kind: str, faces: Iterable[int]) -> "PauliOperator":
        """Product of the same single-qubit Pauli on each listed face (repeats cancel)."""
        mask = 0
        for f in faces:
            mask ^= 1 << f
        kind = kind.upper()
        x = mask if kind in ("X", "Y") else 0
        z = mask if kind in ("Z", "Y") else 0
        return cls(n, x, z)

    @classmethod
    def from_arrays(cls, x_bits, z_bits) -> "PauliOperator":
        x_bits = np.asarray(x_bits)
        z_bits = np.asarray(z_bits)
        if x_bits.shape != z_bits.shape:
            raise UsageError("x and z supports differ in length")
        return cls(x_bits.size, _bits_from_array(x_bits), _bits_from_array(z_bits))

    @property
    def x_support(self) -> np.ndarray:
        return _array_from_bits(self.x, self.n)

    @property
    def z_support(self) -> np.ndarray:
        return _array_from_bits(self.z, self.n)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return not (self.x or self.z)

    def label(self, qubit: int) -> str:
        xb = (self.x >> qubit) & 1
        zb = (self.z >> qubit) & 1
        return "IZXY"[2 * xb + zb]

    def terms(self) -> list[tuple[int, str]]:
        """Non-identity ``(qubit, letter)`` pairs in qubit order."""
        return [(i, self.label(i)) for i in _indices(self.x | self.z)]

    def symplectic(self) -> int:
        """Packed ``x | z << n`` row used by the elimination routines."""
        return self.x | (self.z << self.n)

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return compose(self, other)

    def __str__(self) -> str:
        return "".join(self.label(i) for i in range(self.n))


def _check_lengths(p: PauliOperator, q: PauliOperator) -> None:
    if p.n != q.n:
        raise UsageError(f"operators act on {p.n} and {q.n} qubits")


def compose(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    _check_lengths(p, q)
    return PauliOperator(p.n, p.x ^ q.x, p.z ^ q.z)


def commutes(p: PauliOperator, q: PauliOperator) -> bool:
    _check_lengths(p, q)
    return ((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) % 2 == 0


@dataclass(frozen=True)
class BinaryMatrix:
    """Rows of a GF(2) matrix, each row an int with ``ncols`` meaningful bits."""

    rows: tuple[int, ...]
    ncols: int

    @classmethod
    def from_array(cls, arr) -> "BinaryMatrix":
        arr = np.atleast_2d(np.asarray(arr, dtype=np.uint8))
        return cls(tuple(_bits_from_array(r) for r in arr), arr.shape[1])

    @classmethod
    def identity(cls, n: int) -> "BinaryMatrix":
        return cls(tuple(1 << i for i in range(n)), n)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    def to_array(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, self.ncols), dtype=np.uint8)
        return np.array([_array_from_bits(r, self.ncols) for r in self.rows], dtype=np.uint8)


class EchelonBasis:
    """Row-reduced basis of a set of GF(2) vectors, for repeated membership tests."""

    def __init__(self, vectors: Iterable[int]):
        # pivot bit -> row whose highest set bit is that pivot
        self._pivots: dict[int, int] = {}
        for v in vectors:
            self.add(v)

    def reduce(self, v: int) -> int:
        pivots = self._pivots
        while v:
            top = v.bit_length() - 1
            row = pivots.get(top)
            if row is None:
                return v
            v ^= row
        return 0

    def add(self, v: int) -> bool:
        """Insert ``v``; return True if it was independent of the basis."""
        v = self.reduce(v)
        if not v:
            return False
        self._pivots[v.bit_length() - 1] = v
        return True

    def __contains__(self, v: int) -> bool:
        return self.reduce(v) == 0

    def __len__(self) -> int:
        return len(self._pivots)


def rank(m: BinaryMatrix) -> int:
    return len(EchelonBasis(m.rows))


def in_group(p: PauliOperator, generators: Sequence[PauliOperator]) -> bool:
    """True if ``p`` is, up to phase, a product of some of the generators."""
    for g in generators:
        _check_lengths(p, g)
    basis = EchelonBasis(g.symplectic() for g in generators)
    return p.symplectic() in basis
