from pathlib import Path
import math
import sys

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[1]))

from qatem.errors import ValidationError
from qatem.physcore import RngSpec
from qatem.protocol import gates
from qatem.protocol.runner import (
    ProtocolState,
    classical_detection_probability,
    detection_probability,
    electron_pass,
    enumerate_branches,
    run_protocol,
    simulate_batch,
    small_delta_approximations,
)
from qatem.protocol.states import (
    KET0,
    KET1,
    PLUS,
    CompositeState,
    global_phase_distance,
    normalize,
    phase_state,
)


@pytest.fixture
def rng() -> np.random.Generator:
    return RngSpec(20240229).generator()


def test_composite_state_validation() -> None:
    with pytest.raises(ValidationError, match="4 amplitudes"):
        CompositeState(np.ones(3) / math.sqrt(3))
    with pytest.raises(ValidationError, match="norm"):
        CompositeState(np.ones(4))
    state = CompositeState.product([1.0, 1.0], KET1)
    np.testing.assert_allclose(state.amplitudes, [0, 1 / math.sqrt(2), 0, 1 / math.sqrt(2)])
    np.testing.assert_allclose(state.electron_probabilities(), [0.5, 0.5])
    with pytest.raises(ValidationError):
        normalize([0.0, 0.0])


def test_global_phase_distance_ignores_global_phase() -> None:
    psi = phase_state(0.7)
    assert global_phase_distance(np.exp(1j * 1.3) * psi, psi) < 1e-15


def test_gate_matrices_are_unitary() -> None:
    for matrix in (
        gates.CNOT_QUBIT_CONTROL,
        gates.CNOT_ELECTRON_CONTROL,
        gates.U_ELECTRON,
        gates.specimen_matrix(0.3),
        gates.pass_matrix(0.3),
    ):
        assert gates.is_unitary(matrix)
    assert not gates.is_unitary(2 * np.eye(4))


def test_entangle_is_qubit_controlled() -> None:
    # |e=0, q=1> -> |e=1, q=1>, |e=0, q=0> unchanged
    flipped = gates.gate_entangle(CompositeState.product(KET0, KET1))
    assert flipped.isclose(CompositeState.product(KET1, KET1))
    kept = gates.gate_entangle(CompositeState.product(KET0, KET0))
    assert kept.isclose(CompositeState.product(KET0, KET0))


def test_specimen_phase_on_electron_path_one() -> None:
    state = gates.gate_specimen(CompositeState.product(KET1, PLUS), 0.4)
    np.testing.assert_allclose(state.amplitudes[2:], np.exp(0.4j) * PLUS)
    np.testing.assert_allclose(state.amplitudes[:2], 0.0)


def test_phase_correction() -> None:
    np.testing.assert_allclose(gates.gate_phase_correct(PLUS, 1), [1 / math.sqrt(2), -1 / math.sqrt(2)])
    np.testing.assert_allclose(gates.gate_phase_correct(PLUS, 0), PLUS)
    with pytest.raises(ValidationError):
        gates.gate_phase_correct(PLUS, 2)


def test_measurement_of_definite_electron(rng) -> None:
    outcome, qubit = gates.measure_electron(CompositeState.product(KET1, PLUS), rng)
    assert outcome == 1
    np.testing.assert_allclose(qubit, PLUS)
    outcome, _ = gates.measure_electron(CompositeState.product(KET0, PLUS), rng)
    assert outcome == 0


def test_single_pass_imprints_delta(rng) -> None:
    state = ProtocolState.start(0.25)
    electron_pass(state, rng)
    assert state.electrons_processed == 1
    assert global_phase_distance(state.qubit, phase_state(0.25)) < 1e-14
    assert state.pending_flips == 0


@pytest.mark.parametrize("defer", [False, True])
def test_run_accumulates_k_delta(defer: bool) -> None:
    for seed in range(5):
        result = run_protocol(10, 0.3, RngSpec(seed).generator(), defer_correction=defer, verify=True)
        assert result.p_one == pytest.approx(detection_probability(10, 0.3), abs=1e-12)
        assert result.state.electrons_processed == 10
        assert result.outcome in (0, 1)
        assert len(result.state.records) == 10


def test_deferred_run_tracks_pending_flips() -> None:
    result = run_protocol(12, 0.1, RngSpec(3).generator(), defer_correction=True)
    flips = sum(r.outcome for r in result.state.records)
    assert result.state.pending_flips == flips
    assert not any(r.correction_applied for r in result.state.records)


def test_zero_phase_never_detects(rng) -> None:
    for _ in range(20):
        assert run_protocol(7, 0.0, rng).outcome == 0


def test_k_delta_pi_always_detects(rng) -> None:
    for _ in range(20):
        assert run_protocol(4, math.pi / 4, rng).outcome == 1


def test_detection_probability_examples() -> None:
    assert detection_probability(10, 0.01) == pytest.approx(2.4979e-3, rel=1e-4)
    assert detection_probability(1, 0.01) == pytest.approx(classical_detection_probability(1, 0.01), rel=1e-12)
    ratio = detection_probability(10, 0.01) / classical_detection_probability(10, 0.01)
    assert ratio == pytest.approx(9.99, rel=1e-3)
    assert detection_probability(3, 0.0) == 0.0
    assert classical_detection_probability(5, math.pi) == 1.0


def test_quantum_law_is_periodic() -> None:
    k = 25
    delta = 2 * math.pi / k
    assert detection_probability(k, delta) == pytest.approx(0.0, abs=1e-24)


def test_small_delta_approximations() -> None:
    approx = small_delta_approximations(10, 1e-3)
    assert approx["quantum"] == pytest.approx(detection_probability(10, 1e-3), rel=1e-4)
    assert approx["classical"] == pytest.approx(classical_detection_probability(10, 1e-3), rel=1e-5)
    assert approx["classical_linear"] == pytest.approx(10 * 1e-6 / 4)


@pytest.mark.parametrize("k", [0, -3, 1.5])
def test_k_must_be_positive_integer(k) -> None:
    with pytest.raises(ValidationError):
        detection_probability(k, 0.1)
    with pytest.raises(ValidationError):
        run_protocol(k, 0.1, np.random.default_rng(0))


def test_batch_frequency_matches_law() -> None:
    outcomes = simulate_batch(10, 0.3, 200_000, RngSpec(11).generator())
    assert outcomes.dtype == bool
    assert outcomes.mean() == pytest.approx(math.sin(1.5) ** 2, abs=1e-3)


def test_batch_deferred_correction_matches_law() -> None:
    outcomes = simulate_batch(6, 0.2, 200_000, RngSpec(12).generator(), defer_correction=True)
    assert outcomes.mean() == pytest.approx(math.sin(0.6) ** 2, abs=5e-3)


@pytest.mark.parametrize("delta", [0.0, 0.01, 0.1, 1.0, math.pi])
def test_phase_accumulates_for_every_k(delta: float) -> None:
    rng = RngSpec(21).generator()
    for k in range(1, 65):
        result = run_protocol(k, delta, rng, verify=True)
        assert global_phase_distance(result.pre_readout, phase_state(k * delta)) <= 1e-12
        assert result.p_one == pytest.approx(math.sin(k * delta / 2) ** 2, abs=1e-12)


def test_quantum_to_classical_ratio_grows_as_k() -> None:
    delta = 0.01
    rng = RngSpec(22).generator()
    for k in range(1, 65):
        simulated = run_protocol(k, delta, rng).p_one
        assert simulated == pytest.approx(detection_probability(k, delta), abs=1e-12)
        if k * delta <= 0.3 + 1e-12:
            assert simulated / classical_detection_probability(k, delta) == pytest.approx(k, rel=0.02)


@pytest.mark.parametrize("k", range(1, 11))
@pytest.mark.parametrize("delta", [0.01, 0.17, 1.0, math.pi])
def test_enumeration_matches_law_for_small_k(k: int, delta: float) -> None:
    report = enumerate_branches(k, delta)
    assert report.n_branches == 2**k
    assert report.p_detect == pytest.approx(math.sin(k * delta / 2) ** 2, abs=1e-12)
    assert report.max_state_error <= 1e-12


def test_enumeration_is_exact() -> None:
    report = enumerate_branches(8, 0.17)
    assert report.n_branches == 2**8
    assert report.p_detect == pytest.approx(detection_probability(8, 0.17), abs=1e-13)
    assert report.max_state_error < 1e-12
    np.testing.assert_allclose(report.electron_marginals, 0.5, atol=1e-14)


def test_enumeration_limit() -> None:
    with pytest.raises(ValidationError, match="k <= 20"):
        enumerate_branches(21, 0.1)
