"""
Qubit-assisted phase measurement: k electrons pass the same qubit in turn.

Each pass entangles one electron with the qubit, lets the specimen imprint
delta on the electron's |1> path, mixes the paths with U and measures the
electron. The qubit is left in (|0> +/- e^{i k' delta}|1>)/sqrt(2); the phase
gate removes the sign. After k passes U on the qubit reads out
cos(k delta/2)|0> - i sin(k delta/2)|1> (up to global phase).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..errors import QatemError, ValidationError
from . import gates
from .states import KET0, PLUS, CompositeState, global_phase_distance, phase_state

LOG = logging.getLogger(__name__)

VERIFY_TOLERANCE = 1e-12
MAX_ENUMERATION_PASSES = 20


@dataclass
class PassRecord:
    outcome: int
    detected: bool = True
    correction_applied: bool = False


@dataclass
class ProtocolState:
    qubit: np.ndarray
    delta: float
    electrons_processed: int = 0
    records: List[PassRecord] = field(default_factory=list)

    @classmethod
    def start(cls, delta: float) -> "ProtocolState":
        return cls(qubit=PLUS.copy(), delta=delta)

    @property
    def pending_flips(self) -> int:
        return sum(r.outcome for r in self.records if not r.correction_applied)


@dataclass
class ProtocolResult:
    outcome: int
    p_one: float
    state: ProtocolState
    pre_readout: np.ndarray


def _check_k(k: int) -> None:
    if int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k}")


def electron_pass(state: ProtocolState, rng: np.random.Generator, correct: bool = True) -> int:
    composite = CompositeState.product(KET0, state.qubit)
    composite = gates.gate_entangle(composite)
    composite = gates.gate_specimen(composite, state.delta)
    composite = gates.gate_u_electron(composite)
    outcome, qubit = gates.measure_electron(composite, rng)
    if correct:
        qubit = gates.gate_phase_correct(qubit, outcome)
    state.qubit = qubit
    state.electrons_processed += 1
    state.records.append(PassRecord(outcome=outcome, correction_applied=correct and outcome == 1))
    return outcome


def run_protocol(
    k: int,
    delta: float,
    rng: np.random.Generator,
    defer_correction: bool = False,
    verify: bool = False,
) -> ProtocolResult:
    """Simulate k passes and the final qubit readout.

    With ``defer_correction`` the phase gate is applied once at the end, raised
    to the number of electrons that gave outcome 1.
    """
    _check_k(k)
    state = ProtocolState.start(delta)
    for _ in range(k):
        electron_pass(state, rng, correct=not defer_correction)
    if defer_correction and state.pending_flips % 2 == 1:
        state.qubit = gates.gate_phase_correct(state.qubit, 1)

    pre_readout = state.qubit.copy()
    if verify:
        error = global_phase_distance(pre_readout, phase_state(k * delta))
        if error > VERIFY_TOLERANCE:
            raise QatemError(f"accumulated qubit state off by {error:.3e} after {k} passes")

    readout = gates.gate_u_qubit(pre_readout)
    p_one = float(abs(readout[1]) ** 2)
    outcome = int(rng.random() < p_one)
    return ProtocolResult(outcome=outcome, p_one=p_one, state=state, pre_readout=pre_readout)


def detection_probability(k: int, delta: float) -> float:
    """sin^2(k delta / 2)."""
    _check_k(k)
    return math.sin(k * delta / 2.0) ** 2


def classical_detection_probability(k: int, delta: float) -> float:
    """1 - (1 - sin^2(delta/2))^k: k independent single-pass electrons."""
    _check_k(k)
    p = math.sin(delta / 2.0) ** 2
    if p >= 1.0:
        return 1.0
    return -math.expm1(k * math.log1p(-p))


def small_delta_approximations(k: int, delta: float) -> dict:
    _check_k(k)
    return {
        "quantum": (k * delta) ** 2 / 4.0,
        "classical": 1.0 - (1.0 - delta**2 / 4.0) ** k,
        "classical_linear": k * delta**2 / 4.0,
    }


def simulate_batch(
    k: int,
    delta: float,
    n: int,
    rng: np.random.Generator,
    defer_correction: bool = False,
) -> np.ndarray:
    """Final readout outcomes of ``n`` independent protocol runs, simulated together."""
    _check_k(k)
    qubits = np.tile(PLUS, (n, 1))
    flips = np.zeros(n, dtype=np.int64)
    transfer = gates.pass_matrix(delta)
    for _ in range(k):
        composite = np.zeros((n, 4), dtype=complex)
        composite[:, :2] = qubits
        composite = composite @ transfer.T
        p1 = np.sum(np.abs(composite[:, 2:]) ** 2, axis=1)
        outcome = rng.random(n) < p1
        branch = np.where(outcome[:, None], composite[:, 2:], composite[:, :2])
        qubits = branch / np.linalg.norm(branch, axis=1, keepdims=True)
        if defer_correction:
            flips += outcome
        else:
            qubits[outcome, 1] *= -1.0
    if defer_correction:
        qubits[flips % 2 == 1, 1] *= -1.0
    readout = qubits @ gates.U.T
    return rng.random(n) < np.abs(readout[:, 1]) ** 2


@dataclass
class BranchEnumeration:
    k: int
    delta: float
    n_branches: int
    p_detect: float
    max_state_error: float
    electron_marginals: np.ndarray


def enumerate_branches(k: int, delta: float, max_passes: int = MAX_ENUMERATION_PASSES) -> BranchEnumeration:
    """Walk all 2^k electron-outcome branches with their probabilities, no sampling."""
    _check_k(k)
    if k > max_passes:
        raise ValidationError(f"exhaustive enumeration is limited to k <= {max_passes}, got {k}")
    target = phase_state(k * delta)
    transfer = gates.pass_matrix(delta)
    branches = [(1.0, PLUS.copy())]
    marginals = np.zeros(k)
    for step in range(k):
        expanded = []
        for weight, qubit in branches:
            composite = transfer @ np.kron(KET0, qubit)
            for outcome in (0, 1):
                part = composite[2 * outcome : 2 * outcome + 2]
                p = float(np.vdot(part, part).real)
                if p < gates.DEGENERATE_PROBABILITY:
                    continue
                if outcome == 1:
                    marginals[step] += weight * p
                expanded.append((weight * p, gates.gate_phase_correct(part / math.sqrt(p), outcome)))
        branches = expanded

    p_detect = 0.0
    max_error = 0.0
    for weight, qubit in branches:
        p_detect += weight * float(abs(gates.gate_u_qubit(qubit)[1]) ** 2)
        max_error = max(max_error, global_phase_distance(qubit, target))
    LOG.debug("Enumerated %d branches for k=%d delta=%.4g", len(branches), k, delta)
    return BranchEnumeration(
        k=k,
        delta=delta,
        n_branches=len(branches),
        p_detect=p_detect,
        max_state_error=max_error,
        electron_marginals=marginals,
    )
