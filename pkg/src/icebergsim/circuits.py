"""Circuit IR: gate kinds, validation, and the line-oriented text format.

The gate set is H, X, Y, Z, S, CX, CZ, CCZ plus PREP0/PREPPLUS/MEASZ and a
transversal-Hadamard marker TH used only in logical (pre-encoding) circuits.
Measurements are terminal per qubit: once a qubit is measured no later op may
touch it.  Circuits are immutable after construction and safe to share across
shot workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class GateKind(Enum):
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    CX = "cx"
    CZ = "cz"
    CCZ = "ccz"
    PREP0 = "prep0"
    PREPPLUS = "prepplus"
    MEASZ = "measz"
    TH = "th"  # transversal-H marker, acts on every qubit; logical IR only


# arity = number of qubit indices carried by an op of that kind
GATE_ARITY: dict[GateKind, int] = {
    GateKind.H: 1,
    GateKind.X: 1,
    GateKind.Y: 1,
    GateKind.Z: 1,
    GateKind.S: 1,
    GateKind.CX: 2,
    GateKind.CZ: 2,
    GateKind.CCZ: 3,
    GateKind.PREP0: 1,
    GateKind.PREPPLUS: 1,
    GateKind.MEASZ: 1,
    GateKind.TH: 0,
}

_MNEMONICS = {k.value: k for k in GateKind}


class Role(Enum):
    DATA = "data"
    TOP = "top"
    BOTTOM = "bottom"
    ANCILLA = "ancilla"
    FLAG = "flag"


@dataclass(frozen=True)
class Gate:
    """One operation: a kind plus the qubit indices it acts on."""

    kind: GateKind
    qubits: tuple[int, ...]

    def __post_init__(self):
        if len(self.qubits) != GATE_ARITY[self.kind]:
            raise ValueError(
                f"{self.kind.value} takes {GATE_ARITY[self.kind]} qubits, got {self.qubits}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubit index in {self.kind.value} {self.qubits}")


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[Gate, ...]
    roles: tuple[Role, ...] = ()  # per-qubit labels; empty means all DATA

    def __post_init__(self):
        if self.roles and len(self.roles) != self.num_qubits:
            raise ValueError("roles length must match num_qubits")

    def role(self, q: int) -> Role:
        return self.roles[q] if self.roles else Role.DATA

    @property
    def num_measured(self) -> int:
        return sum(1 for g in self.ops if g.kind is GateKind.MEASZ)

    def measured_qubits(self) -> tuple[int, ...]:
        """Qubits in measurement-bit order (the order their MEASZ ops appear)."""
        return tuple(g.qubits[0] for g in self.ops if g.kind is GateKind.MEASZ)


class CircuitBuilder:
    """Mutable helper that accumulates ops and freezes into a Circuit."""

    def __init__(self, num_qubits: int = 0):
        self.num_qubits = num_qubits
        self.ops: list[Gate] = []
        self._roles: dict[int, Role] = {}

    def add(self, kind: GateKind, *qubits: int) -> "CircuitBuilder":
        self.ops.append(Gate(kind, tuple(qubits)))
        if qubits:
            self.num_qubits = max(self.num_qubits, max(qubits) + 1)
        return self

    def h(self, q):
        return self.add(GateKind.H, q)

    def x(self, q):
        return self.add(GateKind.X, q)

    def y(self, q):
        return self.add(GateKind.Y, q)

    def z(self, q):
        return self.add(GateKind.Z, q)

    def s(self, q):
        return self.add(GateKind.S, q)

    def cx(self, c, t):
        return self.add(GateKind.CX, c, t)

    def cz(self, a, b):
        return self.add(GateKind.CZ, a, b)

    def ccz(self, a, b, c):
        return self.add(GateKind.CCZ, a, b, c)

    def prep0(self, q):
        return self.add(GateKind.PREP0, q)

    def prepplus(self, q):
        return self.add(GateKind.PREPPLUS, q)

    def measz(self, q):
        return self.add(GateKind.MEASZ, q)

    def th(self):
        return self.add(GateKind.TH)

    def set_role(self, q: int, role: Role) -> "CircuitBuilder":
        self._roles[q] = role
        return self

    def build(self, num_qubits: int | None = None, check: bool = True) -> Circuit:
        n = self.num_qubits if num_qubits is None else num_qubits
        roles: tuple[Role, ...] = ()
        if self._roles:
            roles = tuple(self._roles.get(q, Role.DATA) for q in range(n))
        c = Circuit(n, tuple(self.ops), roles)
        if check:
            bad = validate_circuit(c)
            if bad:
                raise CircuitError("; ".join(str(v) for v in bad))
        return c


class CircuitError(ValueError):
    pass


class CircuitSyntaxError(CircuitError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Violation:
    op_index: int
    rule: str
    message: str

    def __str__(self):
        return f"op {self.op_index}: {self.rule}: {self.message}"


def validate_circuit(c: Circuit) -> list[Violation]:
    """Return all invariant violations; empty list means the circuit simulates."""
    out: list[Violation] = []
    measured: set[int] = set()
    touched: set[int] = set()
    for i, g in enumerate(c.ops):
        for q in g.qubits:
            if not 0 <= q < c.num_qubits:
                out.append(Violation(i, "out-of-range", f"qubit {q} >= num_qubits {c.num_qubits}"))
                continue
            if q in measured:
                out.append(Violation(i, "gate-after-measure", f"qubit {q} already measured"))
        if g.kind in (GateKind.PREP0, GateKind.PREPPLUS):
            q = g.qubits[0]
            if q in touched:
                out.append(Violation(i, "prep-not-first", f"prep on already-used qubit {q}"))
        if g.kind is GateKind.MEASZ:
            measured.add(g.qubits[0])
        if g.kind is GateKind.TH:
            touched.update(range(c.num_qubits))
        touched.update(g.qubits)
    return out


def parse_circuit_text(source: str) -> Circuit:
    """Parse the line-oriented circuit format.

    Grammar: optional first line ``qubits N``; then one op per line, lowercase
    mnemonic followed by space-separated decimal indices.  ``#`` starts a
    comment, blank lines are ignored.
    """
    ops: list[Gate] = []
    declared: int | None = None
    max_index = -1
    saw_op = False
    for line_no, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "qubits":
            if saw_op or declared is not None:
                raise CircuitSyntaxError(line_no, "qubits header must be the first line")
            if len(parts) != 2 or not parts[1].isdigit():
                raise CircuitSyntaxError(line_no, "expected 'qubits N'")
            declared = int(parts[1])
            continue
        kind = _MNEMONICS.get(parts[0])
        if kind is None:
            raise CircuitSyntaxError(line_no, f"unknown mnemonic {parts[0]!r}")
        args = parts[1:]
        if len(args) != GATE_ARITY[kind]:
            raise CircuitSyntaxError(
                line_no, f"{parts[0]} takes {GATE_ARITY[kind]} indices, got {len(args)}"
            )
        try:
            qubits = tuple(int(a) for a in args)
        except ValueError:
            raise CircuitSyntaxError(line_no, f"non-integer index in {line!r}") from None
        if any(q < 0 for q in qubits):
            raise CircuitSyntaxError(line_no, "negative qubit index")
        if len(set(qubits)) != len(qubits):
            raise CircuitSyntaxError(line_no, f"duplicate index in {line!r}")
        saw_op = True
        ops.append(Gate(kind, qubits))
        if qubits:
            max_index = max(max_index, max(qubits))
    n = declared if declared is not None else max_index + 1
    c = Circuit(n, tuple(ops))
    bad = validate_circuit(c)
    if bad:
        raise CircuitError("; ".join(str(v) for v in bad))
    return c


def serialize_circuit(c: Circuit) -> str:
    """Emit the bit-exact text form; parse(serialize(c)) == c op-for-op."""
    lines = [f"qubits {c.num_qubits}"]
    for g in c.ops:
        if g.qubits:
            lines.append(g.kind.value + " " + " ".join(str(q) for q in g.qubits))
        else:
            lines.append(g.kind.value)
    return "\n".join(lines) + "\n"


_CLASS_BY_KIND = {
    GateKind.H: "1q",
    GateKind.X: "1q",
    GateKind.Y: "1q",
    GateKind.Z: "1q",
    GateKind.S: "1q",
    GateKind.TH: "1q",
    GateKind.CX: "2q",
    GateKind.CZ: "2q",
    GateKind.CCZ: "3q",
    GateKind.PREP0: "prep",
    GateKind.PREPPLUS: "prep",
    GateKind.MEASZ: "measure",
}


def gate_counts(c: Circuit) -> dict[str, int]:
    """Counts partitioned into {1q, 2q, 3q, prep, measure}; sums to len(ops)."""
    out = {"1q": 0, "2q": 0, "3q": 0, "prep": 0, "measure": 0}
    for g in c.ops:
        out[_CLASS_BY_KIND[g.kind]] += 1
    return out
