from pathlib import Path
import math
import sys

import pytest

sys.path.append(str(Path(__file__).resolve().parents[1]))

from qatem.errors import ValidationError
from qatem.physcore import RngSpec
from qatem.protocol.montecarlo import chunk_sizes, monte_carlo, wilson_interval

SEED = RngSpec(20240229)


def test_chunk_sizes() -> None:
    assert chunk_sizes(250, 100) == [100, 100, 50]
    assert chunk_sizes(200, 100) == [100, 100]
    assert chunk_sizes(7, 100) == [7]


def test_wilson_interval() -> None:
    low, high = wilson_interval(50, 100)
    assert low < 0.5 < high
    assert high - low == pytest.approx(0.19, abs=0.01)
    low, high = wilson_interval(0, 100)
    assert low == pytest.approx(0.0, abs=1e-12)
    assert 0 < high < 0.05
    assert all(math.isnan(v) for v in wilson_interval(0, 0))


def test_perfect_detectors_match_quantum_law() -> None:
    report = monte_carlo(10, 0.3, 1.0, 1_000_000, SEED, workers=4)
    assert report.run_failure_freq == 0.0
    assert report.detect_freq == pytest.approx(0.99500, abs=5e-4)
    assert report.detect_ci[0] < report.detect_freq < report.detect_ci[1]
    assert report.analytic_p == pytest.approx(math.sin(1.5) ** 2)
    assert not report.all_failed


def test_lossy_detectors_fail_runs() -> None:
    report = monte_carlo(10, 0.3, 0.99, 1_000_000, SEED, workers=4)
    assert report.expected_failure == pytest.approx(0.0956, abs=1e-4)
    assert report.run_failure_freq == pytest.approx(0.0956, abs=1.5e-3)
    assert report.detect_freq == pytest.approx(math.sin(1.5) ** 2, abs=1e-3)
    assert report.failure_ci[0] < report.run_failure_freq < report.failure_ci[1]


def test_result_independent_of_worker_count() -> None:
    one = monte_carlo(5, 0.2, 0.95, 250_000, SEED, workers=1, chunk_size=50_000)
    four = monte_carlo(5, 0.2, 0.95, 250_000, SEED, workers=4, chunk_size=50_000)
    assert (one.n_failed, one.n_detected) == (four.n_failed, four.n_detected)
    assert one.detect_freq == four.detect_freq


def test_seed_changes_result() -> None:
    a = monte_carlo(5, 0.2, 0.95, 100_000, RngSpec(1), workers=2)
    b = monte_carlo(5, 0.2, 0.95, 100_000, RngSpec(2), workers=2)
    assert (a.n_failed, a.n_detected) != (b.n_failed, b.n_detected)


def test_blind_detectors_fail_every_run() -> None:
    report = monte_carlo(3, 0.5, 0.0, 10_000, SEED)
    assert report.all_failed
    assert report.n_failed == 10_000
    assert report.run_failure_freq == 1.0
    assert math.isnan(report.detect_freq)
    payload = report.as_dict()
    assert payload["detect_freq"] is None or math.isnan(payload["detect_freq"])
    assert payload["rng"]["master_seed"] == SEED.master_seed


def test_chunk_callback_sees_every_chunk() -> None:
    seen = []
    monte_carlo(2, 0.1, 1.0, 25_000, SEED, workers=2, chunk_size=10_000, on_chunk=seen.append)
    assert sorted(c.index for c in seen) == [0, 1, 2]
    assert sum(c.trials for c in seen) == 25_000


def test_deferred_correction_gives_same_law() -> None:
    report = monte_carlo(6, 0.2, 1.0, 200_000, SEED, defer_correction=True)
    assert report.detect_freq == pytest.approx(math.sin(0.6) ** 2, abs=5e-3)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"eta": 1.5},
        {"eta": -0.1},
        {"trials": 0},
        {"trials": 10.5},
        {"chunk_size": 0},
    ],
)
def test_monte_carlo_validation(kwargs: dict) -> None:
    args = {"k": 3, "delta": 0.1, "eta": 1.0, "trials": 100, "rng_spec": SEED}
    args.update(kwargs)
    with pytest.raises(ValidationError):
        monte_carlo(**args)
