"""Pauli strings and weighted sums of them.

A string on n qubits is stored as two bit masks ``(x, z)``: qubit q carries
X if only bit q of ``x`` is set, Z if only bit q of ``z`` is set and Y if both
are. The operator represented is ``i**popcount(x & z) * X**x Z**z``, which
makes every stored string Hermitian. The text form lists qubit 0 first, so
``"XZI"`` is X on qubit 0 and Z on qubit 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

PRUNE_TOL = 1e-14

_PHASES = (1, 1j, -1, -1j)
_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTER.items()}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=False)
class PauliString:
    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        full = (1 << self.n) - 1
        if self.n < 0 or self.x & ~full or self.z & ~full:
            raise ValueError("Pauli masks exceed register size")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        x = z = 0
        for q, ch in enumerate(label.upper()):
            try:
                bx, bz = _BITS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(len(label), x, z)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        bx, bz = _BITS[letter]
        return cls(n, bx << qubit, bz << qubit)

    @classmethod
    def zs(cls, n: int, qubits: Iterable[int]) -> "PauliString":
        z = 0
        for q in qubits:
            z |= 1 << q
        return cls(n, 0, z)

    @property
    def label(self) -> str:
        return "".join(_LETTER[(self.x >> q) & 1, (self.z >> q) & 1] for q in range(self.n))

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def support(self) -> list[int]:
        m = self.x | self.z
        return [q for q in range(self.n) if m >> q & 1]

    def commutes(self, other: "PauliString") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def __str__(self):
        return self.label

    def __repr__(self):
        return f"PauliString({self.label!r})"


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product a·b as (phase, string) with phase in {1, i, -1, -i}."""
    if a.n != b.n:
        raise ValueError(f"register sizes differ: {a.n} vs {b.n}")
    x, z = a.x ^ b.x, a.z ^ b.z
    k = _popcount(a.x & a.z) + _popcount(b.x & b.z) + 2 * _popcount(a.z & b.x) - _popcount(x & z)
    return _PHASES[k % 4], PauliString(a.n, x, z)


class PauliSum:
    """Mapping from Pauli strings to complex coefficients on a fixed register.

    Coefficients with magnitude at or below ``PRUNE_TOL`` are dropped.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[PauliString, complex] | None = None):
        self.n = n
        clean: dict[tuple[int, int], complex] = {}
        for p, c in (terms or {}).items():
            if p.n != n:
                raise ValueError(f"string {p} does not fit a {n}-qubit register")
            key = (p.x, p.z)
            clean[key] = clean.get(key, 0) + complex(c)
        self._terms = {k: v for k, v in clean.items() if abs(v) > PRUNE_TOL}

    @classmethod
    def _from_keys(cls, n, terms):
        out = cls.__new__(cls)
        out.n = n
        out._terms = {k: v for k, v in terms.items() if abs(v) > PRUNE_TOL}
        return out

    @classmethod
    def from_labels(cls, terms: Mapping[str, complex]) -> "PauliSum":
        items = [(PauliString.from_label(k), v) for k, v in terms.items()]
        n = items[0][0].n if items else 0
        return cls(n, dict(items))

    def items(self):
        for (x, z), c in self._terms.items():
            yield PauliString(self.n, x, z), c

    def coefficient(self, p: PauliString | str) -> complex:
        if isinstance(p, str):
            p = PauliString.from_label(p)
        return self._terms.get((p.x, p.z), 0j)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_hermitian(self, tol: float = PRUNE_TOL) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def _check(self, other):
        if not isinstance(other, PauliSum):
            raise TypeError("expected a PauliSum")
        if other.n != self.n:
            raise ValueError(f"register sizes differ: {self.n} vs {other.n}")

    def __add__(self, other: "PauliSum") -> "PauliSum":
        self._check(other)
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0) + v
        return PauliSum._from_keys(self.n, out)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other * -1

    def __mul__(self, scalar) -> "PauliSum":
        s = complex(scalar)
        return PauliSum._from_keys(self.n, {k: v * s for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        self._check(other)
        out: dict = {}
        for (ax, az), ca in self._terms.items():
            na = _popcount(ax & az)
            for (bx, bz), cb in other._terms.items():
                x, z = ax ^ bx, az ^ bz
                k = na + _popcount(bx & bz) + 2 * _popcount(az & bx) - _popcount(x & z)
                out[(x, z)] = out.get((x, z), 0) + _PHASES[k % 4] * ca * cb
        return PauliSum._from_keys(self.n, out)

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def allclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= atol for k in keys)

    def sorted_items(self):
        """Terms in lexicographic order of their labels."""
        return sorted(self.items(), key=lambda pc: pc[0].label)

    def __repr__(self):
        if not self._terms:
            return f"PauliSum(n={self.n}, 0)"
        return " + ".join(f"({c})*{p.label}" for p, c in self.sorted_items())

    def to_matrix(self) -> np.ndarray:
        """Dense 2**n x 2**n matrix (qubit 0 is the least significant bit)."""
        dim = 1 << self.n
        out = np.zeros((dim, dim), dtype=complex)
        cols = np.arange(dim)
        for (x, z), c in self._terms.items():
            rows = cols ^ x
            parity = np.array([_popcount(v & z) & 1 for v in cols])
            phase = (1j) ** _popcount(x & z) * np.where(parity, -1, 1)
            out[rows, cols] += c * phase
        return out


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """[a, b] = ab - ba; only anticommuting string pairs contribute (2ab)."""
    a._check(b)
    out: dict = {}
    for (ax, az), ca in a._terms.items():
        na = _popcount(ax & az)
        for (bx, bz), cb in b._terms.items():
            if (_popcount(ax & bz) + _popcount(az & bx)) & 1 == 0:
                continue
            x, z = ax ^ bx, az ^ bz
            k = na + _popcount(bx & bz) + 2 * _popcount(az & bx) - _popcount(x & z)
            out[(x, z)] = out.get((x, z), 0) + 2 * _PHASES[k % 4] * ca * cb
    return PauliSum._from_keys(a.n, out)


def hs_inner(a: PauliSum, b: PauliSum) -> complex:
    """Normalized Hilbert-Schmidt product Tr(a^dagger b) / 2**n."""
    a._check(b)
    small, large = (a._terms, b._terms) if len(a) <= len(b) else (b._terms, a._terms)
    total = 0j
    for k in small:
        if k in large:
            total += a._terms[k].conjugate() * b._terms[k]
    return total
