"""Iceberg [[2m, 2m-2, 2]] error-detection toolkit."""

from .circuits import (
    Circuit,
    CircuitBuilder,
    CircuitError,
    CircuitSyntaxError,
    Gate,
    GateKind,
    Role,
    gate_counts,
    parse_circuit_text,
    serialize_circuit,
    validate_circuit,
)
from .code import (
    CodeParams,
    CompileError,
    DecodedShot,
    EncodedCircuit,
    Fragment,
    GadgetMode,
    accepted_distribution,
    compile_logical_circuit,
    decode_shot,
    encode_block,
    logical_ccz,
    logical_cz,
    logical_pauli,
    syndrome_readout,
    targeted_h,
    transversal_h,
)
from .paulis import PauliString
from .simulator import (
    QUBIT_CAP,
    SimulationError,
    StateVector,
    apply_gate,
    pauli_expectation,
    run_distribution,
    sample_shots,
    simulate_statevector,
    statevector_fidelity,
)

__all__ = [name for name in dir() if not name.startswith("_")]
