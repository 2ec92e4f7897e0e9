from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ValidationError

NORM_TOLERANCE = 1e-12

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)


def normalize(vec: Sequence[complex]) -> np.ndarray:
    arr = np.asarray(vec, dtype=complex)
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise ValidationError("cannot normalize the zero vector")
    return arr / norm


def phase_state(phase: float) -> np.ndarray:
    """(|0> + e^{i phase}|1>)/sqrt(2)."""
    return np.array([1.0, np.exp(1j * phase)], dtype=complex) / math.sqrt(2.0)


def global_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - e^{i chi} b| after removing the best global phase chi."""
    overlap = np.vdot(b, a)
    chi = np.angle(overlap) if abs(overlap) > 0 else 0.0
    return float(np.max(np.abs(a - np.exp(1j * chi) * b)))


@dataclass(frozen=True, eq=False)
class CompositeState:
    """|electron, qubit> amplitudes over |00>, |01>, |10>, |11>."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 4:
            raise ValidationError(f"composite state needs 4 amplitudes, got {amps.size}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValidationError(f"composite state norm {norm:.15f} differs from 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def product(cls, electron: Sequence[complex], qubit: Sequence[complex]) -> "CompositeState":
        return cls(np.kron(normalize(electron), normalize(qubit)))

    def as_matrix(self) -> np.ndarray:
        """Rows indexed by the electron state, columns by the qubit state."""
        return self.amplitudes.reshape(2, 2)

    def electron_probabilities(self) -> np.ndarray:
        return np.sum(np.abs(self.as_matrix()) ** 2, axis=1)

    def isclose(self, other: "CompositeState", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.amplitudes, other.amplitudes, atol=atol, rtol=0.0))
