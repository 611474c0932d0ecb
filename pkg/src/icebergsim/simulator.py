"""Dense statevector simulation for circuits of up to 20 qubits.

Two execution styles share one program representation:

* exact mode -- follows every measurement branch (with support pruning) and
  returns the full outcome distribution; deterministic.
* shot mode -- samples measurement outcomes with a per-shot RNG; used by the
  noisy Monte-Carlo machinery.

Internally the engine keeps only *active* qubits in the state tensor and
projects each qubit out as soon as its last gate has been applied (legal
because measurements are terminal per qubit), so wide circuits with short
ancilla lifetimes stay cheap.  A Runner additionally caches the no-fault
prefix of a fixed circuit so that fault-injected reruns only pay for the
suffix, and precompiles the gate stream into axis-resolved kernels for the
hot sampling path.  Measurement bits are always reported in the order the
MEASZ ops appear in the circuit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate, GateKind
from .paulis import PauliString

QUBIT_CAP = 20
SUPPORT_THRESHOLD = 1e-12
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    """Full-width dense state; qubit 0 is the most significant index bit."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise SimulationError("amplitude length must be 2**num_qubits")

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        if n > QUBIT_CAP:
            raise SimulationError(f"{n} qubits exceeds cap {QUBIT_CAP}")
        amps = np.zeros(2**n, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n, amps)

    def norm_error(self) -> float:
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0)


# ---------------------------------------------------------------------------
# flat-state kernels; state is a contiguous 1-D array over n active axes,
# axis 0 most significant


def _views1(state: np.ndarray, n: int, a: int):
    m = state.reshape(1 << a, 2, 1 << (n - a - 1))
    return m[:, 0], m[:, 1]


def _apply_h(state, n, a):
    v0, v1 = _views1(state, n, a)
    t = v0 + v1
    d = v0 - v1
    v0[...] = t
    v0 *= _INV_SQRT2
    v1[...] = d
    v1 *= _INV_SQRT2


def _apply_x(state, n, a):
    v0, v1 = _views1(state, n, a)
    t = v0.copy()
    v0[...] = v1
    v1[...] = t


def _apply_y(state, n, a):
    v0, v1 = _views1(state, n, a)
    t = v0.copy()
    v0[...] = v1
    v0 *= -1j
    v1[...] = t
    v1 *= 1j


def _apply_z(state, n, a):
    _, v1 = _views1(state, n, a)
    v1 *= -1.0


def _apply_s(state, n, a):
    _, v1 = _views1(state, n, a)
    v1 *= 1j


def _apply_cx(state, n, ac, at):
    lo, hi = (ac, at) if ac < at else (at, ac)
    m = state.reshape(1 << lo, 2, 1 << (hi - lo - 1), 2, 1 << (n - hi - 1))
    if ac < at:
        w0, w1 = m[:, 1, :, 0], m[:, 1, :, 1]
    else:
        w0, w1 = m[:, 0, :, 1], m[:, 1, :, 1]
    t = w0.copy()
    w0[...] = w1
    w1[...] = t


def _apply_cz(state, n, a, b):
    lo, hi = (a, b) if a < b else (b, a)
    m = state.reshape(1 << lo, 2, 1 << (hi - lo - 1), 2, 1 << (n - hi - 1))
    m[:, 1, :, 1] *= -1.0


def _apply_ccz(state, n, a, b, c):
    a0, a1, a2 = sorted((a, b, c))
    m = state.reshape(
        1 << a0, 2, 1 << (a1 - a0 - 1), 2, 1 << (a2 - a1 - 1), 2, 1 << (n - a2 - 1)
    )
    m[:, 1, :, 1, :, 1] *= -1.0


_1Q_KERNELS = {
    GateKind.H: _apply_h,
    GateKind.X: _apply_x,
    GateKind.Y: _apply_y,
    GateKind.Z: _apply_z,
    GateKind.S: _apply_s,
}

_PREP_VECS = {
    GateKind.PREP0: np.array([1.0, 0.0], dtype=np.complex128),
    GateKind.PREPPLUS: np.array([_INV_SQRT2, _INV_SQRT2], dtype=np.complex128),
}


def _measure_split(state: np.ndarray, n: int, a: int):
    """Return (p1, branch0, branch1); branches are contiguous, unnormalized."""
    m = state.reshape(1 << a, 2, 1 << (n - a - 1))
    b0 = np.ascontiguousarray(m[:, 0]).reshape(-1)
    b1 = np.ascontiguousarray(m[:, 1]).reshape(-1)
    p1 = float(np.vdot(b1, b1).real)
    return p1, b0, b1


# ---------------------------------------------------------------------------
# program: circuit ops reordered so each qubit is measured right after its
# last gate (identical distribution; keeps the active state narrow)


@dataclass(frozen=True)
class _Step:
    gate: Gate
    op_index: int  # position in the original circuit, -1 for injected faults
    meas_ordinal: int = -1  # for MEASZ steps: original measurement bit position


def build_program(circuit: Circuit) -> list[_Step]:
    last_gate: dict[int, int] = {}
    for i, g in enumerate(circuit.ops):
        if g.kind is GateKind.MEASZ:
            continue
        qubits = range(circuit.num_qubits) if g.kind is GateKind.TH else g.qubits
        for q in qubits:
            last_gate[q] = i
    pending: dict[int, list[_Step]] = {}
    ordinal = 0
    for i, g in enumerate(circuit.ops):
        if g.kind is GateKind.MEASZ:
            after = last_gate.get(g.qubits[0], -1)
            pending.setdefault(after, []).append(_Step(g, i, ordinal))
            ordinal += 1
    program: list[_Step] = list(pending.get(-1, ()))
    for i, g in enumerate(circuit.ops):
        if g.kind is GateKind.MEASZ:
            continue
        program.append(_Step(g, i))
        program.extend(pending.get(i, ()))
    return program


# plan opcodes for the compiled hot path
_OP_1Q = 0  # (code, kernel, axis)
_OP_CX = 1
_OP_CZ = 2
_OP_CCZ = 3
_OP_MEAS = 4  # (code, axis, ordinal)
_OP_ACT = 5  # (code, prep vector)


class _Plan:
    """Axis-resolved kernel stream for one circuit; activation order is fixed."""

    def __init__(self, program: list[_Step], num_qubits: int):
        self.entries: list[list[tuple]] = []  # per program position
        self.axis_after: list[dict[int, int]] = []  # wire -> axis after position p
        self.n_after: list[int] = []
        axis: dict[int, int] = {}

        def activate(entries, wire, vec):
            entries.append((_OP_ACT, vec))
            axis[wire] = len(axis)

        for step in program:
            g = step.gate
            entries: list[tuple] = []
            if g.kind in _PREP_VECS:
                if g.qubits[0] in axis:
                    raise SimulationError(f"prep on active qubit {g.qubits[0]}")
                activate(entries, g.qubits[0], _PREP_VECS[g.kind])
            elif g.kind is GateKind.TH:
                for w in range(num_qubits):
                    if w not in axis:
                        activate(entries, w, _PREP_VECS[GateKind.PREP0])
                for w in range(num_qubits):
                    entries.append((_OP_1Q, _apply_h, axis[w]))
            else:
                for w in g.qubits:
                    if w not in axis:
                        activate(entries, w, _PREP_VECS[GateKind.PREP0])
                if g.kind is GateKind.MEASZ:
                    a = axis[g.qubits[0]]
                    entries.append((_OP_MEAS, a, step.meas_ordinal))
                    del axis[g.qubits[0]]
                    for w, b in axis.items():
                        if b > a:
                            axis[w] = b - 1
                elif g.kind is GateKind.CX:
                    entries.append((_OP_CX, axis[g.qubits[0]], axis[g.qubits[1]]))
                elif g.kind is GateKind.CZ:
                    entries.append((_OP_CZ, axis[g.qubits[0]], axis[g.qubits[1]]))
                elif g.kind is GateKind.CCZ:
                    entries.append((_OP_CCZ, axis[g.qubits[0]], axis[g.qubits[1]], axis[g.qubits[2]]))
                else:
                    entries.append((_OP_1Q, _1Q_KERNELS[g.kind], axis[g.qubits[0]]))
            if len(axis) > QUBIT_CAP:
                raise SimulationError(f"active width exceeds qubit cap {QUBIT_CAP}")
            self.entries.append(entries)
            self.axis_after.append(dict(axis))
            self.n_after.append(len(axis))


def _exec_entry(entry, state: np.ndarray, n: int):
    """Apply one non-measurement plan entry; returns (state, n)."""
    code = entry[0]
    if code == _OP_1Q:
        entry[1](state, n, entry[2])
    elif code == _OP_CX:
        _apply_cx(state, n, entry[1], entry[2])
    elif code == _OP_CZ:
        _apply_cz(state, n, entry[1], entry[2])
    elif code == _OP_CCZ:
        _apply_ccz(state, n, entry[1], entry[2], entry[3])
    elif code == _OP_ACT:
        state = np.multiply.outer(state, entry[1]).reshape(-1)
        n += 1
    return state, n


class Runner:
    """Prefix-cached executor for repeated runs of one circuit with Pauli insertions.

    The no-fault prefix is simulated once; snapshots are stored before every
    program position up to the first non-deterministic measurement.  Each
    faulty run then resumes from the position of its earliest insertion, so
    exhaustive fault enumeration and Monte-Carlo shot sampling only pay for
    the circuit suffix.

    Insertions are (op_index, when, gates) with ``when`` one of "before" or
    "after", relative to that op of the original circuit.  An X inserted
    before a MEASZ is treated as a classical readout flip.
    """

    def __init__(self, circuit: Circuit):
        if circuit.num_qubits > QUBIT_CAP:
            raise SimulationError(f"{circuit.num_qubits} qubits exceeds cap {QUBIT_CAP}")
        self.circuit = circuit
        self.program = build_program(circuit)
        self.pos_of_op = {step.op_index: p for p, step in enumerate(self.program) if step.op_index >= 0}
        self.num_bits = circuit.num_measured
        self.plan = _Plan(self.program, circuit.num_qubits)
        self._snapshots: list[tuple[np.ndarray, int, list[int]]] = []
        self._build_snapshots()

    def _build_snapshots(self):
        state = np.ones(1, dtype=np.complex128)
        n = 0
        bits = [-1] * self.num_bits
        self._snapshots.append((state.copy(), n, list(bits)))
        for entries in self.plan.entries:
            stop = False
            for entry in entries:
                if entry[0] == _OP_MEAS:
                    p1, b0, b1 = _measure_split(state, n, entry[1])
                    if p1 < SUPPORT_THRESHOLD:
                        state = b0 / math.sqrt(1.0 - p1)
                        bits[entry[2]] = 0
                        n -= 1
                    elif p1 > 1.0 - SUPPORT_THRESHOLD:
                        state = b1 / math.sqrt(p1)
                        bits[entry[2]] = 1
                        n -= 1
                    else:
                        stop = True  # non-deterministic: snapshots stop here
                        break
                else:
                    state, n = _exec_entry(entry, state, n)
            if stop:
                break
            self._snapshots.append((state.copy(), n, list(bits)))

    @property
    def p_max(self) -> int:
        return len(self._snapshots) - 1

    def _split_insertions(self, insertions):
        """Partition into (readout bit flips, pauli kernels keyed by position)."""
        flips: set[int] = set()
        by_pos: dict[int, list[tuple]] = {}
        first = self.p_max
        for op_index, when, gates in insertions:
            pos = self.pos_of_op[op_index]
            step = self.program[pos]
            if step.gate.kind is GateKind.MEASZ and when == "before":
                if [g.kind for g in gates] != [GateKind.X]:
                    raise SimulationError("only an X readout flip may precede a MEASZ")
                flips ^= {step.meas_ordinal}
                continue
            amap = self.plan.axis_after[pos]
            kernels = [(_OP_1Q, _1Q_KERNELS[g.kind], amap[g.qubits[0]]) for g in gates]
            by_pos.setdefault(pos, []).extend(kernels)
            first = min(first, pos)
        return flips, by_pos, first

    def exact(self, insertions=(), prune: float = SUPPORT_THRESHOLD) -> dict[str, float]:
        """Exact outcome distribution of the circuit with the given insertions."""
        flips, by_pos, first = self._split_insertions(insertions)
        start = min(first, self.p_max)
        stream: list[tuple] = []
        for pos in range(start, len(self.plan.entries)):
            stream.extend(self.plan.entries[pos])
            stream.extend(by_pos.get(pos, ()))
        state0, n0, bits0 = self._snapshots[start]
        stack = [(0, state0.copy(), n0, list(bits0), 1.0)]
        out: dict[str, float] = {}
        while stack:
            idx, state, n, bits, weight = stack.pop()
            dead = False
            while idx < len(stream):
                entry = stream[idx]
                idx += 1
                if entry[0] == _OP_MEAS:
                    p1, b0, b1 = _measure_split(state, n, entry[1])
                    p0 = 1.0 - p1
                    n -= 1
                    branches = []
                    if weight * p1 > prune:
                        branches.append((1, b1, p1))
                    if weight * p0 > prune:
                        branches.append((0, b0, p0))
                    if not branches:
                        dead = True
                        break
                    for value, sub, pk in branches[1:]:
                        obits = list(bits)
                        obits[entry[2]] = value
                        stack.append((idx, sub / math.sqrt(pk), n, obits, weight * pk))
                    value, sub, pk = branches[0]
                    state = sub / math.sqrt(pk)
                    bits[entry[2]] = value
                    weight *= pk
                else:
                    state, n = _exec_entry(entry, state, n)
            if dead:
                continue
            key_bits = list(bits)
            for o in flips:
                key_bits[o] ^= 1
            key = "".join(str(b) for b in key_bits if b >= 0)
            out[key] = out.get(key, 0.0) + weight
        return out

    def sample(self, rng, insertions=(), reject_bits: frozenset[int] | None = None) -> str | None:
        """Sample one shot; returns the bit string, or None if early-rejected.

        ``reject_bits`` are measurement ordinals that must read 0; as soon as
        one reads 1 the shot is classified rejected and simulation stops.
        """
        flips, by_pos, first = self._split_insertions(insertions)
        start = min(first, self.p_max)
        state0, n, bits0 = self._snapshots[start]
        state = state0.copy()
        bits = list(bits0)
        if reject_bits:
            for o in flips:
                if o in reject_bits and bits[o] == 0:
                    return None
        total_positions = len(self.plan.entries)
        for pos in range(start, total_positions):
            for entry in self.plan.entries[pos]:
                if entry[0] == _OP_MEAS:
                    p1, b0, b1 = _measure_split(state, n, entry[1])
                    n -= 1
                    if rng.random() < p1:
                        state = b1 / math.sqrt(p1)
                        value = 1
                    else:
                        state = b0 / math.sqrt(1.0 - p1)
                        value = 0
                    o = entry[2]
                    bits[o] = value
                    if reject_bits and o in reject_bits and value ^ (o in flips):
                        return None
                else:
                    state, n = _exec_entry(entry, state, n)
            for entry in by_pos.get(pos, ()):
                state, n = _exec_entry(entry, state, n)
        for o in flips:
            bits[o] ^= 1
        return "".join(str(b) for b in bits)


# ---------------------------------------------------------------------------
# exact distribution over the branch tree


def run_distribution(c: Circuit) -> dict[str, float]:
    """Exact distribution over terminal MEASZ bits; unmeasured qubits marginalized."""
    dist = Runner(c).exact()
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-10:
        raise SimulationError(f"pruned distribution mass {total} off by >1e-10")
    return {k: v / total for k, v in dist.items()}


def sample_shots(c: Circuit, shots: int, seed: int) -> list[str]:
    """i.i.d. samples from run_distribution(c); reproducible and order-independent.

    Each shot uses an RNG derived from (seed, shot index), so fan-out across
    workers cannot change the sampled sequence.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    dist = run_distribution(c)
    keys = sorted(dist)
    probs = np.array([dist[k] for k in keys])
    cdf = np.cumsum(probs)
    out = []
    for i in range(shots):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        u = rng.random() * cdf[-1]
        out.append(keys[min(int(np.searchsorted(cdf, u, side="right")), len(keys) - 1)])
    return out


# ---------------------------------------------------------------------------
# full-width statevector API


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply one unitary gate (not PREP/MEASZ) to a full-width state."""
    if gate.kind in (GateKind.MEASZ, GateKind.PREP0, GateKind.PREPPLUS):
        raise SimulationError(f"apply_gate does not take {gate.kind.value}")
    for q in gate.qubits:
        if q >= state.num_qubits:
            raise SimulationError(f"qubit {q} out of range")
    n = state.num_qubits
    t = state.amplitudes.copy()
    if gate.kind is GateKind.TH:
        for q in range(n):
            _apply_h(t, n, q)
    elif gate.kind is GateKind.CX:
        _apply_cx(t, n, gate.qubits[0], gate.qubits[1])
    elif gate.kind is GateKind.CZ:
        _apply_cz(t, n, gate.qubits[0], gate.qubits[1])
    elif gate.kind is GateKind.CCZ:
        _apply_ccz(t, n, gate.qubits[0], gate.qubits[1], gate.qubits[2])
    else:
        _1Q_KERNELS[gate.kind](t, n, gate.qubits[0])
    return StateVector(n, t)


def simulate_statevector(c: Circuit) -> StateVector:
    """Run a measurement-free circuit from |0...0> and return the final state."""
    if c.num_qubits > QUBIT_CAP:
        raise SimulationError(f"{c.num_qubits} qubits exceeds cap {QUBIT_CAP}")
    n = c.num_qubits
    t = StateVector.zero(n).amplitudes
    for g in c.ops:
        if g.kind is GateKind.MEASZ:
            raise SimulationError("simulate_statevector requires a measurement-free circuit")
        if g.kind in _PREP_VECS:
            if g.kind is GateKind.PREPPLUS:
                _apply_h(t, n, g.qubits[0])
            continue
        if g.kind is GateKind.TH:
            for q in range(n):
                _apply_h(t, n, q)
        elif g.kind is GateKind.CX:
            _apply_cx(t, n, g.qubits[0], g.qubits[1])
        elif g.kind is GateKind.CZ:
            _apply_cz(t, n, g.qubits[0], g.qubits[1])
        elif g.kind is GateKind.CCZ:
            _apply_ccz(t, n, g.qubits[0], g.qubits[1], g.qubits[2])
        else:
            _1Q_KERNELS[g.kind](t, n, g.qubits[0])
        err = abs(float(np.vdot(t, t).real) - 1.0)
        if err > 1e-10:
            raise SimulationError(f"norm drifted by {err}")
    return StateVector(n, t)


_PAULI_MATS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def pauli_expectation(state: StateVector, p: PauliString) -> float:
    """<psi|P|psi> for Hermitian P (phase +-1)."""
    if p.n != state.num_qubits:
        raise SimulationError(f"Pauli length {p.n} != {state.num_qubits} qubits")
    if not p.is_hermitian():
        raise SimulationError("expectation of a non-Hermitian (+-i phase) Pauli")
    n = state.num_qubits
    t = state.amplitudes.copy()
    for q, letter in enumerate(p.letters):
        if letter == "I":
            continue
        if letter == "X":
            _apply_x(t, n, q)
        elif letter == "Y":
            _apply_y(t, n, q)
        else:
            _apply_z(t, n, q)
    val = complex(np.vdot(state.amplitudes, t)) * p.phase
    return float(val.real)


def statevector_fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2; 1 iff equal up to global phase."""
    if a.num_qubits != b.num_qubits:
        raise SimulationError("dimension mismatch")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
