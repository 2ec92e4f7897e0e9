from .gates import (
    gate_entangle,
    gate_phase_correct,
    gate_specimen,
    gate_u_electron,
    gate_u_qubit,
    measure_electron,
)
from .montecarlo import MCReport, monte_carlo
from .qnd import (
    cnot_role_reversal_check,
    detector_requirement,
    phase_flip_equivalence_check,
    qnd_chain_miss_probability,
)
from .runner import (
    ProtocolState,
    classical_detection_probability,
    detection_probability,
    enumerate_branches,
    run_protocol,
)
from .states import CompositeState

__all__ = [
    "CompositeState",
    "MCReport",
    "ProtocolState",
    "classical_detection_probability",
    "cnot_role_reversal_check",
    "detection_probability",
    "detector_requirement",
    "enumerate_branches",
    "gate_entangle",
    "gate_phase_correct",
    "gate_specimen",
    "gate_u_electron",
    "gate_u_qubit",
    "measure_electron",
    "monte_carlo",
    "phase_flip_equivalence_check",
    "qnd_chain_miss_probability",
    "run_protocol",
]
