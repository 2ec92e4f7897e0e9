"""
Gates of one electron pass, on |electron, qubit> (index 2e + q).

The electron-qubit interaction is the ideal controlled-NOT with the qubit as
control. The specimen adds a phase delta to the electron |1> path, U is the
real symmetric beam-splitter (1/sqrt 2)[[1, 1], [1, -1]] and the correction is
the phase gate |1> -> -|1> on the qubit.
"""
from __future__ import annotations

import logging
import math
from typing import Tuple

import numpy as np

from ..errors import ValidationError
from .states import CompositeState

LOG = logging.getLogger(__name__)

U = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
I2 = np.eye(2, dtype=complex)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)

# qubit controls, electron is flipped
CNOT_QUBIT_CONTROL = np.kron(I2, P0) + np.kron(X, P1)
# electron controls, qubit is flipped
CNOT_ELECTRON_CONTROL = np.kron(P0, I2) + np.kron(P1, X)
U_ELECTRON = np.kron(U, I2)

DEGENERATE_PROBABILITY = 1e-15


def specimen_matrix(delta: float) -> np.ndarray:
    return np.diag([1.0, 1.0, np.exp(1j * delta), np.exp(1j * delta)])


def pass_matrix(delta: float) -> np.ndarray:
    """U_e . specimen(delta) . CNOT for one electron, before its measurement."""
    return U_ELECTRON @ specimen_matrix(delta) @ CNOT_QUBIT_CONTROL


def is_unitary(matrix: np.ndarray, tol: float = 1e-14) -> bool:
    eye = np.eye(matrix.shape[0])
    return bool(np.max(np.abs(matrix.conj().T @ matrix - eye)) <= tol)


def _apply(matrix: np.ndarray, state: CompositeState) -> CompositeState:
    return CompositeState(matrix @ state.amplitudes)


def gate_entangle(state: CompositeState) -> CompositeState:
    return _apply(CNOT_QUBIT_CONTROL, state)


def gate_specimen(state: CompositeState, delta: float) -> CompositeState:
    return _apply(specimen_matrix(delta), state)


def gate_u_electron(state: CompositeState) -> CompositeState:
    return _apply(U_ELECTRON, state)


def gate_u_qubit(qubit: np.ndarray) -> np.ndarray:
    return U @ np.asarray(qubit, dtype=complex)


def gate_phase_correct(qubit: np.ndarray, outcome: int) -> np.ndarray:
    if outcome not in (0, 1):
        raise ValidationError(f"outcome must be 0 or 1, got {outcome}")
    qubit = np.asarray(qubit, dtype=complex)
    return Z @ qubit if outcome == 1 else qubit.copy()


def measure_electron(state: CompositeState, rng: np.random.Generator) -> Tuple[int, np.ndarray]:
    """Projective electron measurement in the |0>, |1> basis.

    Returns the outcome and the renormalized qubit state left behind.
    """
    probs = state.electron_probabilities()
    p1 = float(probs[1])
    if p1 < DEGENERATE_PROBABILITY:
        outcome = 0
    elif probs[0] < DEGENERATE_PROBABILITY:
        outcome = 1
    else:
        outcome = int(rng.random() < p1)
    branch = state.as_matrix()[outcome]
    return outcome, branch / math.sqrt(probs[outcome])
