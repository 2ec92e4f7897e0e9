from pathlib import Path
import math
import sys

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[1]))

from qatem.errors import ValidationError
from qatem.protocol.qnd import (
    KET_A,
    KET_S,
    cnot_role_reversal_check,
    detector_requirement,
    phase_flip_equivalence_check,
    phase_flip_interaction,
    qnd_chain_miss_probability,
)


def test_role_reversal_in_symmetric_basis() -> None:
    check = cnot_role_reversal_check()
    assert check.max_elementwise_error < 1e-15
    np.testing.assert_allclose(check.symmetric_basis, check.expected, atol=1e-15)
    assert not np.allclose(check.computational, check.expected)


def test_phase_flip_matches_cnot() -> None:
    assert phase_flip_equivalence_check() < 1e-15
    # |a> picks up -1 only when the qubit is |1>
    H = phase_flip_interaction()
    np.testing.assert_allclose(H @ np.kron(KET_A, [0, 1]), -np.kron(KET_A, [0, 1]), atol=1e-15)
    np.testing.assert_allclose(H @ np.kron(KET_S, [0, 1]), np.kron(KET_S, [0, 1]), atol=1e-15)
    np.testing.assert_allclose(H @ np.kron(KET_A, [1, 0]), np.kron(KET_A, [1, 0]), atol=1e-15)


def test_chain_miss_probability() -> None:
    assert qnd_chain_miss_probability(3, 0.1) == pytest.approx(1e-3)
    assert qnd_chain_miss_probability(1, 0.25) == 0.25
    with pytest.raises(ValidationError):
        qnd_chain_miss_probability(0, 0.1)
    with pytest.raises(ValidationError):
        qnd_chain_miss_probability(2, 1.5)


def test_detector_requirement_for_ten_electrons() -> None:
    req = detector_requirement(10, 0.9)
    assert req.miss_qubit_assisted == pytest.approx(1 - 0.9**0.1, rel=1e-12)
    assert req.miss_multi_pass == pytest.approx(0.1)
    assert req.strictness == pytest.approx(0.1 / (1 - 0.9**0.1), rel=1e-12)
    assert req.detectors_needed(0.1) == 2
    assert req.detectors_needed(0.5) == 7
    assert qnd_chain_miss_probability(req.detectors_needed(0.5), 0.5) <= req.miss_qubit_assisted


def test_single_electron_needs_no_extra_margin() -> None:
    req = detector_requirement(1, 0.9)
    assert req.miss_qubit_assisted == pytest.approx(req.miss_multi_pass, rel=1e-12)
    assert req.strictness == pytest.approx(1.0, rel=1e-12)
    assert req.detectors_needed(0.05) == 1


def test_perfect_target() -> None:
    req = detector_requirement(5, 1.0)
    assert req.miss_qubit_assisted == 0.0
    assert math.isinf(req.strictness)
    with pytest.raises(ValidationError, match="perfect"):
        req.detectors_needed(0.1)


@pytest.mark.parametrize("k,target", [(0, 0.9), (2.5, 0.9), (10, 0.0), (10, 1.2)])
def test_detector_requirement_validation(k, target: float) -> None:
    with pytest.raises(ValidationError):
        detector_requirement(k, target)


def test_single_detector_miss_range() -> None:
    req = detector_requirement(10, 0.9)
    for miss in (0.0, 1.0):
        with pytest.raises(ValidationError):
            req.detectors_needed(miss)
