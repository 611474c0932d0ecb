"""n-qubit Pauli operators with phase tracking.

A PauliString is a phase in {+1, -1, +i, -i} together with one letter per
qubit from {I, X, Y, Z}.  Multiplication is closed (group structure) and
weight counts non-identity letters.
"""
from __future__ import annotations

from dataclasses import dataclass

# phase bookkeeping: phases are powers of i, stored as exponent mod 4
_PHASE_VALUE = {0: 1 + 0j, 1: 1j, 2: -1 + 0j, 3: -1j}
_PHASE_LABEL = {0: "+", 1: "+i", 2: "-", 3: "-i"}

# single-qubit products: (a, b) -> (phase exponent of i, letter) for a*b
_TABLE = {
    ("I", "I"): (0, "I"), ("I", "X"): (0, "X"), ("I", "Y"): (0, "Y"), ("I", "Z"): (0, "Z"),
    ("X", "I"): (0, "X"), ("X", "X"): (0, "I"), ("X", "Y"): (1, "Z"), ("X", "Z"): (3, "Y"),
    ("Y", "I"): (0, "Y"), ("Y", "X"): (3, "Z"), ("Y", "Y"): (0, "I"), ("Y", "Z"): (1, "X"),
    ("Z", "I"): (0, "Z"), ("Z", "X"): (1, "Y"), ("Z", "Y"): (3, "X"), ("Z", "Z"): (0, "I"),
}

LETTERS = ("I", "X", "Y", "Z")


@dataclass(frozen=True)
class PauliString:
    phase_exp: int  # power of i, mod 4
    letters: tuple[str, ...]

    def __post_init__(self):
        if self.phase_exp not in (0, 1, 2, 3):
            raise ValueError("phase exponent must be 0..3")
        if any(l not in LETTERS for l in self.letters):
            raise ValueError(f"bad Pauli letters {self.letters}")

    @classmethod
    def from_label(cls, label: str, n: int | None = None, phase: complex = 1) -> "PauliString":
        """Build from e.g. 'XXIZ'; phase one of 1, -1, 1j, -1j."""
        exp = {1: 0, 1j: 1, -1: 2, -1j: 3}[phase]
        letters = tuple(label.upper())
        if n is not None and len(letters) != n:
            raise ValueError(f"label length {len(letters)} != n {n}")
        return cls(exp, letters)

    @classmethod
    def single(cls, n: int, q: int, letter: str) -> "PauliString":
        letters = tuple(letter if i == q else "I" for i in range(n))
        return cls(0, letters)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(0, ("I",) * n)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def phase(self) -> complex:
        return _PHASE_VALUE[self.phase_exp]

    def weight(self) -> int:
        return sum(1 for l in self.letters if l != "I")

    def is_hermitian(self) -> bool:
        return self.phase_exp in (0, 2)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("length mismatch")
        exp = (self.phase_exp + other.phase_exp) % 4
        letters = []
        for a, b in zip(self.letters, other.letters):
            e, l = _TABLE[(a, b)]
            exp = (exp + e) % 4
            letters.append(l)
        return PauliString(exp, tuple(letters))

    def commutes_with(self, other: "PauliString") -> bool:
        if self.n != other.n:
            raise ValueError("length mismatch")
        anti = 0
        for a, b in zip(self.letters, other.letters):
            if a != "I" and b != "I" and a != b:
                anti ^= 1
        return anti == 0

    def __str__(self):
        return _PHASE_LABEL[self.phase_exp] + "".join(self.letters)
