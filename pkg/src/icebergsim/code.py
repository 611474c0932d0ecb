"""Iceberg [[2m, 2m-2, 2]] code: block layout, gadget catalog, compiler, decoder.

Block layout for one code block of m >= 2: physical wire 0 is the top qubit
(X-parity tracker), wires 1..k hold the k = 2m-2 data qubits, wire n-1 = 2m-1
is the bottom qubit (Z-parity tracker).  Logical operators are
Xbar_i = X_top X_i and Zbar_i = Z_i Z_bottom; the all-zeros codeword is the
n-qubit GHZ state.

Gadget catalog notes
--------------------
The fault-tolerant gadgets below are certified by exhaustive single-fault
injection (see noise.verify_fault_tolerance); that certification, not the
construction sketch, is the acceptance authority.

* Encoding: H + CX fan-out chain; the fault-tolerant variant checks
  Z_q1 Z_bottom with one ancilla, which catches the even-weight suffix flips
  a mid-chain X fault would otherwise leave behind.
* Targeted H (non-FT): unhook the target qubit from the block (CX from
  bottom, CX onto top), apply a bare H, hook it back: five gates.
* Targeted H (FT): move the logical qubit into a freshly verified [[4,2,2]]
  sub-block (logical SWAP built from pairwise CX fans), apply the sub-block's
  transversal H (whose built-in logical swap deposits H|psi> on the second
  sub-slot), move it back, then un-encode the sub-block so every one of its
  wires ends in |0> and is checked.  Five check ancillas: four sub-block
  wires plus the sub-encode parity check.
* CZbar / CCZbar (non-FT): diagonal composites over data and bottom wires.
* CZbar / CCZbar (FT): load the logical value of a control qubit onto an
  accumulator ancilla (CX from its data wire and from bottom), deliver the
  phase with CZ/CCZ gates that touch at most one block wire each, unload.
  A Z fault on an accumulator is equivalent to a Zbar on the loaded control,
  which the compiler arranges to be harmless (no later Hadamard on that
  qubit); every fault pairing an accumulator with a block wire also hits a
  weight-1 block error that the terminal checks detect.  Value-change flag
  ancillas wrap each accumulator's delivery window.  CCZbar registers
  exactly four check ancillas (two accumulators, two flags).
* Syndrome readout: one |+> ancilla controls CX onto every block wire and is
  read in the X basis (the S_x eigenvalue); a flag ancilla is coupled from
  the syndrome ancilla after the first and before the last block CX, so any
  ancilla X hook whose residual suffix flip has even weight fires the flag
  (odd-weight residues flip the terminal parity instead).  The Z stabilizer
  is the even-parity constraint on the terminal block readout.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .circuits import Circuit, Gate, GateKind, Role, validate_circuit
from .simulator import QUBIT_CAP


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class CodeParams:
    """Block description: n = 2m physical, k = 2m-2 logical, distance 2."""

    m: int

    def __post_init__(self):
        if self.m < 2:
            raise CompileError("Iceberg block needs m >= 2")

    @property
    def n(self) -> int:
        return 2 * self.m

    @property
    def k(self) -> int:
        return 2 * self.m - 2

    @property
    def d(self) -> int:
        return 2

    @property
    def t(self) -> int:
        return (self.d - 1) // 2

    @property
    def top_index(self) -> int:
        return 0

    @property
    def bottom_index(self) -> int:
        return self.n - 1

    def data_index(self, i: int) -> int:
        if not 0 <= i < self.k:
            raise CompileError(f"logical index {i} out of range for k={self.k}")
        return 1 + i


class GadgetMode(Enum):
    NON_FT = "nonft"
    FT = "ft"


@dataclass(frozen=True)
class EncodedCircuit:
    """Physical circuit plus the registry needed to post-select and decode."""

    circuit: Circuit
    params: CodeParams
    mode: GadgetMode
    check_bits: tuple[int, ...]  # measured-bit indices, each expected 0
    parity_set: tuple[int, ...]  # block readout bits whose parity must be even
    logical_pairs: tuple[tuple[int, int], ...]  # (data bit, bottom bit) per logical qubit
    source_qubits: int  # leading logical qubits that carry the caller's circuit

    def manifest(self) -> dict:
        return {
            "check_bits": list(self.check_bits),
            "parity_set": list(self.parity_set),
            "logical_pairs": [list(p) for p in self.logical_pairs],
            "mode": self.mode.value,
            "m": self.params.m,
            "source_qubits": self.source_qubits,
        }

    def manifest_text(self) -> str:
        return json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class DecodedShot:
    accepted: bool
    reason: str  # OK | FLAG_FIRED | PARITY_ODD
    logical_bits: str | None  # length-k string, present iff accepted


@dataclass(frozen=True)
class Fragment:
    """A gadget as a standalone op list over block wires 0..n-1 plus ancillas."""

    ops: tuple[Gate, ...]
    num_qubits: int
    block_qubits: int
    check_wires: tuple[int, ...]  # ancilla wires whose terminal MEASZ must read 0

    @property
    def ancilla_count(self) -> int:
        return self.num_qubits - self.block_qubits


# ---------------------------------------------------------------------------


class _Emitter:
    """Shared op/wire bookkeeping for fragments and full compilation."""

    def __init__(self, params: CodeParams):
        self.params = params
        self.ops: list[Gate] = []
        self.next_wire = params.n
        self.check_wires: list[int] = []
        self.roles: dict[int, Role] = {params.top_index: Role.TOP, params.bottom_index: Role.BOTTOM}
        for i in range(params.k):
            self.roles[params.data_index(i)] = Role.DATA
        self._pools: dict[str, list[int]] = {}

    def _g(self, kind: GateKind, *wires: int):
        self.ops.append(Gate(kind, wires))

    def _alloc(self, prep: GateKind, role: Role, check: bool = True) -> int:
        w = self.next_wire
        self.next_wire += 1
        if self.next_wire > QUBIT_CAP:
            raise CompileError(f"ancilla budget exhausted: need {self.next_wire} > cap {QUBIT_CAP}")
        self._g(prep, w)
        self.roles[w] = role
        if check:
            self.check_wires.append(w)
        return w

    def pool(self, name: str, spec: list[tuple[GateKind, Role]]) -> list[int]:
        """Allocate a named ancilla pool once; later calls reuse the same wires."""
        wires = self._pools.get(name)
        if wires is None:
            wires = [self._alloc(prep, role) for prep, role in spec]
            self._pools[name] = wires
        return wires

    # -- gadget emitters ----------------------------------------------------

    def emit_encode(self, mode: GadgetMode):
        p = self.params
        chain = [p.top_index] + [p.data_index(i) for i in range(p.k)] + [p.bottom_index]
        self._g(GateKind.H, p.top_index)
        for a, b in zip(chain, chain[1:]):
            self._g(GateKind.CX, a, b)
        if mode is GadgetMode.FT:
            (c,) = self.pool("encode_check", [(GateKind.PREP0, Role.FLAG)])
            self._g(GateKind.CX, p.data_index(0), c)
            self._g(GateKind.CX, p.bottom_index, c)

    def emit_pauli(self, kind: GateKind, i: int):
        p = self.params
        if kind is GateKind.X:
            self._g(GateKind.X, p.top_index)
            self._g(GateKind.X, p.data_index(i))
        elif kind is GateKind.Z:
            self._g(GateKind.Z, p.data_index(i))
            self._g(GateKind.Z, p.bottom_index)
        else:
            raise CompileError(f"no logical Pauli gadget for {kind}")

    def emit_transversal_h(self):
        p = self.params
        for w in [p.top_index] + [p.data_index(i) for i in range(p.k)] + [p.bottom_index]:
            self._g(GateKind.H, w)

    def emit_targeted_h(self, i: int, mode: GadgetMode):
        p = self.params
        t, di, b = p.top_index, p.data_index(i), p.bottom_index
        if mode is GadgetMode.NON_FT:
            self._g(GateKind.CX, b, di)
            self._g(GateKind.CX, di, t)
            self._g(GateKind.H, di)
            self._g(GateKind.CX, di, t)
            self._g(GateKind.CX, b, di)
            return
        tp, s1, s2, bp, c = self.pool(
            "h_sub",
            [(GateKind.PREP0, Role.ANCILLA)] * 4 + [(GateKind.PREP0, Role.FLAG)],
        )
        g = self._g
        # verified GHZ prep of the [[4,2,2]] sub-block
        g(GateKind.H, tp)
        g(GateKind.CX, tp, s1)
        g(GateKind.CX, s1, s2)
        g(GateKind.CX, s2, bp)
        g(GateKind.CX, s1, c)
        g(GateKind.CX, bp, c)
        # logical SWAP(main i <-> sub slot 1)
        swap_in = [(di, tp), (di, s1), (b, tp), (b, s1)]
        swap_out = [(s1, t), (s1, di), (bp, t), (bp, di)]
        for cw, tw in swap_in + swap_out + swap_in:
            g(GateKind.CX, cw, tw)
        # transversal H on the sub-block: H|psi> lands on sub slot 2
        for w in (tp, s1, s2, bp):
            g(GateKind.H, w)
        # logical SWAP(main i <-> sub slot 2)
        swap2_in = [(di, tp), (di, s2), (b, tp), (b, s2)]
        swap2_out = [(s2, t), (s2, di), (bp, t), (bp, di)]
        for cw, tw in swap2_in + swap2_out + swap2_in:
            g(GateKind.CX, cw, tw)
        # un-encode the sub-block; all four wires must return to |0>
        g(GateKind.CX, bp, s2)
        g(GateKind.CX, bp, s1)
        g(GateKind.CX, bp, tp)
        g(GateKind.H, bp)
        g(GateKind.CX, s2, tp)
        g(GateKind.CX, s1, tp)
        g(GateKind.H, s1)

    def _acc_pool(self) -> list[int]:
        return self.pool(
            "phase_acc",
            [
                (GateKind.PREP0, Role.ANCILLA),
                (GateKind.PREP0, Role.FLAG),
                (GateKind.PREP0, Role.ANCILLA),
                (GateKind.PREP0, Role.FLAG),
            ],
        )

    def emit_cz(self, i: int, j: int, mode: GadgetMode, load_side: int | None = None):
        p = self.params
        di, dj, b = p.data_index(i), p.data_index(j), p.bottom_index
        g = self._g
        if mode is GadgetMode.NON_FT:
            g(GateKind.CZ, di, dj)
            g(GateKind.CZ, di, b)
            g(GateKind.CZ, dj, b)
            g(GateKind.Z, b)
            return
        if load_side is None:
            load_side = i
        other = j if load_side == i else i
        dl, do = p.data_index(load_side), p.data_index(other)
        e, f = self._acc_pool()[:2]
        g(GateKind.CX, dl, e)
        g(GateKind.CX, b, e)
        g(GateKind.CX, e, f)
        g(GateKind.CZ, e, do)
        g(GateKind.CZ, e, b)
        g(GateKind.CX, e, f)
        g(GateKind.CX, b, e)
        g(GateKind.CX, dl, e)

    def emit_ccz(self, a: int, bq: int, cq: int, mode: GadgetMode):
        p = self.params
        da, db, dc, b = p.data_index(a), p.data_index(bq), p.data_index(cq), p.bottom_index
        g = self._g
        if mode is GadgetMode.NON_FT:
            g(GateKind.CCZ, da, db, dc)
            g(GateKind.CCZ, da, db, b)
            g(GateKind.CCZ, da, dc, b)
            g(GateKind.CCZ, db, dc, b)
            g(GateKind.CZ, da, b)
            g(GateKind.CZ, db, b)
            g(GateKind.CZ, dc, b)
            g(GateKind.Z, b)
            return
        e1, f1, e2, f2 = self._acc_pool()
        g(GateKind.CX, da, e1)
        g(GateKind.CX, b, e1)
        g(GateKind.CX, e1, f1)
        g(GateKind.CX, db, e2)
        g(GateKind.CX, b, e2)
        g(GateKind.CX, e2, f2)
        g(GateKind.CCZ, e1, e2, dc)
        g(GateKind.CCZ, e1, e2, b)
        g(GateKind.CX, e2, f2)
        g(GateKind.CX, b, e2)
        g(GateKind.CX, db, e2)
        g(GateKind.CX, e1, f1)
        g(GateKind.CX, b, e1)
        g(GateKind.CX, da, e1)

    def emit_syndrome_readout(self):
        p = self.params
        sx, az = self.pool(
            "readout",
            [(GateKind.PREPPLUS, Role.ANCILLA), (GateKind.PREP0, Role.FLAG)],
        )
        block = [p.top_index] + [p.data_index(i) for i in range(p.k)] + [p.bottom_index]
        # flag window covers every hook position whose residual suffix flip has
        # even weight (odd-weight residues are caught by the terminal parity)
        self._g(GateKind.CX, sx, block[0])
        self._g(GateKind.CX, sx, az)
        for w in block[1:-1]:
            self._g(GateKind.CX, sx, w)
        self._g(GateKind.CX, sx, az)
        self._g(GateKind.CX, sx, block[-1])
        self._g(GateKind.H, sx)


# ---------------------------------------------------------------------------
# public fragment catalog (spec operations); wires 0..n-1 are the block


def _fragment(params: CodeParams, fill) -> Fragment:
    em = _Emitter(params)
    fill(em)
    return Fragment(tuple(em.ops), em.next_wire, params.n, tuple(em.check_wires))


def encode_block(params: CodeParams, mode: GadgetMode) -> Fragment:
    """GHZ preparation of logical |0...0>; FT mode adds the parity-check ancilla."""
    return _fragment(params, lambda em: em.emit_encode(mode))


def logical_pauli(params: CodeParams, kind: GateKind, i: int) -> Fragment:
    """Xbar_i = X_top X_i or Zbar_i = Z_i Z_bottom: two physical gates."""
    return _fragment(params, lambda em: em.emit_pauli(kind, i))


def targeted_h(params: CodeParams, i: int, mode: GadgetMode) -> Fragment:
    """Logical H on one encoded qubit; FT form registers exactly 5 check ancillas."""
    return _fragment(params, lambda em: em.emit_targeted_h(i, mode))


def transversal_h(params: CodeParams) -> Fragment:
    """One physical H per block qubit: logical H on every qubit, zero ancillas."""
    return _fragment(params, lambda em: em.emit_transversal_h())


def logical_cz(params: CodeParams, i: int, j: int, mode: GadgetMode) -> Fragment:
    return _fragment(params, lambda em: em.emit_cz(i, j, mode))


def logical_ccz(params: CodeParams, a: int, b: int, c: int, mode: GadgetMode) -> Fragment:
    """Logical CCZ; FT form registers exactly 4 check ancillas."""
    if params.k < 3:
        raise CompileError("logical CCZ needs k >= 3 (m >= 3)")
    if len({a, b, c}) != 3:
        raise CompileError("logical CCZ needs three distinct qubits")
    return _fragment(params, lambda em: em.emit_ccz(a, b, c, mode))


def syndrome_readout(params: CodeParams) -> Fragment:
    return _fragment(params, lambda em: em.emit_syndrome_readout())


# ---------------------------------------------------------------------------
# full compilation


_SUPPORTED = {
    GateKind.H,
    GateKind.X,
    GateKind.Z,
    GateKind.CX,
    GateKind.CZ,
    GateKind.CCZ,
    GateKind.MEASZ,
    GateKind.TH,
}


def lower_cx(ops: tuple[Gate, ...]) -> tuple[Gate, ...]:
    """Rewrite CX(c,t) as H(t) CZ(c,t) H(t); other ops pass through."""
    out: list[Gate] = []
    for g in ops:
        if g.kind is GateKind.CX:
            c, t = g.qubits
            out.append(Gate(GateKind.H, (t,)))
            out.append(Gate(GateKind.CZ, (c, t)))
            out.append(Gate(GateKind.H, (t,)))
        else:
            out.append(g)
    return tuple(out)


def params_for(source_qubits: int, m: int | None = None) -> CodeParams:
    k_needed = max(2, source_qubits + (source_qubits % 2))
    m_needed = (k_needed + 2) // 2
    if m is None:
        m = m_needed
    elif m < m_needed:
        raise CompileError(f"m={m} too small for {source_qubits} logical qubits")
    return CodeParams(m)


def targeted_h_indices(logical: Circuit) -> list[int]:
    """Indices (in the CX-lowered op list) of ops encoded as targeted-H gadgets."""
    return [i for i, g in enumerate(lower_cx(logical.ops)) if g.kind is GateKind.H]


def compile_logical_circuit(
    logical: Circuit,
    mode: GadgetMode,
    m: int | None = None,
    overrides: dict[int, GadgetMode] | None = None,
) -> EncodedCircuit:
    """Encode a logical circuit into one Iceberg block.

    The logical gate set is {H, X, Z, CX, CZ, CCZ, MEASZ, TH}; CX is lowered
    to H CZ H first.  ``overrides`` maps indices of the lowered op list to a
    per-gate mode (the paper's mixed configurations).  Encoding and syndrome
    readout are always performed fault-tolerantly; ``mode`` selects the gate
    gadgets.  Transversal-H markers are only accepted as the first op, where
    their physical form is exact.
    """
    overrides = overrides or {}
    for g in logical.ops:
        if g.kind not in _SUPPORTED:
            raise CompileError(f"unsupported logical gate {g.kind.value}")
    params = params_for(logical.num_qubits, m)
    lowered = lower_cx(logical.ops)
    measured: set[int] = set()
    for idx, g in enumerate(lowered):
        if g.kind is GateKind.TH and any(x.kind is not GateKind.TH for x in lowered[:idx]):
            raise CompileError("transversal-H marker must be the first op")
        if g.kind is GateKind.MEASZ:
            measured.add(g.qubits[0])
        elif any(q in measured for q in g.qubits):
            raise CompileError("logical gate after measurement")

    # for each CZ, prefer loading the accumulator from a qubit with no later
    # H gadget: a Z fault there stays a harmless phase through readout
    later_h: list[set[int]] = []
    acc: set[int] = set()
    for g in reversed(lowered):
        later_h.append(set(acc))
        if g.kind is GateKind.H:
            acc.add(g.qubits[0])
        elif g.kind is GateKind.TH:
            acc.update(range(logical.num_qubits))
    later_h.reverse()

    em = _Emitter(params)
    em.emit_encode(GadgetMode.FT)
    for idx, g in enumerate(lowered):
        gmode = overrides.get(idx, mode)
        if g.kind is GateKind.MEASZ:
            continue
        if g.kind is GateKind.TH:
            em.emit_transversal_h()
        elif g.kind is GateKind.H:
            em.emit_targeted_h(g.qubits[0], gmode)
        elif g.kind in (GateKind.X, GateKind.Z):
            em.emit_pauli(g.kind, g.qubits[0])
        elif g.kind is GateKind.CZ:
            i, j = g.qubits
            load = i if i not in later_h[idx] else (j if j not in later_h[idx] else i)
            em.emit_cz(i, j, gmode, load_side=load)
        elif g.kind is GateKind.CCZ:
            em.emit_ccz(*g.qubits, gmode)
    em.emit_syndrome_readout()

    # terminal measurements: ancillas in wire order, then the block
    block = [params.top_index] + [params.data_index(i) for i in range(params.k)]
    block.append(params.bottom_index)
    meas_order = sorted(em.check_wires) + block
    ops = list(em.ops)
    for w in meas_order:
        ops.append(Gate(GateKind.MEASZ, (w,)))
    bit_of = {w: i for i, w in enumerate(meas_order)}
    roles = tuple(em.roles.get(q, Role.ANCILLA) for q in range(em.next_wire))
    circuit = Circuit(em.next_wire, tuple(ops), roles)
    bad = validate_circuit(circuit)
    if bad:  # pragma: no cover - compiler bug guard
        raise CompileError("; ".join(str(v) for v in bad))
    return EncodedCircuit(
        circuit=circuit,
        params=params,
        mode=mode,
        check_bits=tuple(bit_of[w] for w in sorted(em.check_wires)),
        parity_set=tuple(bit_of[w] for w in block),
        logical_pairs=tuple(
            (bit_of[params.data_index(i)], bit_of[params.bottom_index]) for i in range(params.k)
        ),
        source_qubits=logical.num_qubits,
    )


# ---------------------------------------------------------------------------
# decoding


def decode_shot(ec: EncodedCircuit, bits: str) -> DecodedShot:
    if len(bits) != ec.circuit.num_measured:
        raise ValueError(f"expected {ec.circuit.num_measured} bits, got {len(bits)}")
    if any(bits[i] != "0" for i in ec.check_bits):
        return DecodedShot(False, "FLAG_FIRED", None)
    if sum(int(bits[i]) for i in ec.parity_set) % 2 == 1:
        return DecodedShot(False, "PARITY_ODD", None)
    logical = "".join(str(int(bits[d]) ^ int(bits[b])) for d, b in ec.logical_pairs)
    return DecodedShot(True, "OK", logical)


def accepted_distribution(ec: EncodedCircuit, dist: dict[str, float]) -> tuple[dict[str, float], float]:
    """Post-select a physical outcome distribution.

    Returns (conditional distribution over the source logical bits, rejection
    probability).  Padding qubits beyond source_qubits are marginalized out.
    """
    acc: dict[str, float] = {}
    rejected = 0.0
    for bits, p in dist.items():
        d = decode_shot(ec, bits)
        if not d.accepted:
            rejected += p
            continue
        key = d.logical_bits[: ec.source_qubits]
        acc[key] = acc.get(key, 0.0) + p
    total = sum(acc.values())
    if total > 0.0:
        acc = {k: v / total for k, v in acc.items()}
    return acc, rejected
