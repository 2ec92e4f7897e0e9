"""
Quantum-nondemolition view of the electron-qubit interaction.

In the symmetric/antisymmetric basis |s> = (|0>+|1>)/sqrt 2,
|a> = (|0>-|1>)/sqrt 2 the controlled-NOT with the qubit as control turns into
one where the electron controls and the qubit flips |s> <-> |a>. Detecting the
qubit flip therefore detects an electron in |a> without disturbing it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .gates import CNOT_ELECTRON_CONTROL, CNOT_QUBIT_CONTROL, P1, U

LOG = logging.getLogger(__name__)

KET_S = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
KET_A = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)
SA_BASIS = np.kron(U, U)


@dataclass(frozen=True, eq=False)
class RoleReversalCheck:
    max_elementwise_error: float
    computational: np.ndarray
    symmetric_basis: np.ndarray
    expected: np.ndarray


def cnot_role_reversal_check() -> RoleReversalCheck:
    transformed = SA_BASIS.conj().T @ CNOT_QUBIT_CONTROL @ SA_BASIS
    error = float(np.max(np.abs(transformed - CNOT_ELECTRON_CONTROL)))
    LOG.debug("CNOT role reversal error %.3e", error)
    return RoleReversalCheck(
        max_elementwise_error=error,
        computational=CNOT_QUBIT_CONTROL.copy(),
        symmetric_basis=transformed,
        expected=CNOT_ELECTRON_CONTROL.copy(),
    )


def phase_flip_interaction() -> np.ndarray:
    """pi phase on the electron |a> component iff the qubit is |1>."""
    flip_a = np.eye(2) - 2.0 * np.outer(KET_A, KET_A.conj())
    return np.kron(np.eye(2), np.eye(2) - P1) + np.kron(flip_a, P1)


def phase_flip_equivalence_check() -> float:
    """Max elementwise distance between the phase-flip interaction and the CNOT."""
    return float(np.max(np.abs(phase_flip_interaction() - CNOT_QUBIT_CONTROL)))


def qnd_chain_miss_probability(n_detectors: int, miss: float) -> float:
    """Chance that n QND detectors in series all miss the same electron."""
    if n_detectors < 1:
        raise ValidationError(f"need at least one detector, got {n_detectors}")
    if not 0.0 <= miss <= 1.0:
        raise ValidationError(f"miss probability must lie in [0, 1], got {miss}")
    return miss**n_detectors


@dataclass(frozen=True)
class DetectorRequirement:
    k: int
    target_success: float
    miss_qubit_assisted: float
    miss_multi_pass: float

    @property
    def strictness(self) -> float:
        """How many times smaller the per-electron miss budget is with k electrons."""
        if self.miss_qubit_assisted == 0.0:
            return math.inf
        return self.miss_multi_pass / self.miss_qubit_assisted

    def detectors_needed(self, miss_single: float) -> int:
        """QND detectors in series so that the chained miss fits the qubit-assisted budget."""
        if not 0.0 < miss_single < 1.0:
            raise ValidationError(f"single-detector miss must lie in (0, 1), got {miss_single}")
        if self.miss_qubit_assisted <= 0.0:
            raise ValidationError("a target success of 1 needs perfect detectors")
        n = math.ceil(math.log(self.miss_qubit_assisted) / math.log(miss_single) - 1e-12)
        return max(n, 1)


def detector_requirement(k: int, target_success: float) -> DetectorRequirement:
    """Per-electron miss probability allowed for a whole-run success of ``target_success``.

    The qubit-assisted run needs every one of k electrons seen; a multi-pass
    measurement needs its single electron seen once.
    """
    if int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k}")
    if not 0.0 < target_success <= 1.0:
        raise ValidationError(f"target success must lie in (0, 1], got {target_success}")
    return DetectorRequirement(
        k=k,
        target_success=target_success,
        miss_qubit_assisted=-math.expm1(math.log(target_success) / k),
        miss_multi_pass=1.0 - target_success,
    )
