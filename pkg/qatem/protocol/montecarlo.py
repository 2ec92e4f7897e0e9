"""
Monte Carlo runs of the protocol with lossy electron detectors.

Each electron is missed independently with probability 1 - eta and any miss
fails the whole run. Trials are split into fixed-size chunks; chunk i draws
from child stream i of the run's RngSpec, so results depend on (seed, stream,
chunk size) only and not on how many workers process the chunks.
"""
from __future__ import annotations

import concurrent.futures
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.stats import binomtest

from ..errors import ValidationError
from ..physcore import RngSpec
from .runner import classical_detection_probability, detection_probability, simulate_batch

LOG = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 100_000
CONFIDENCE_LEVEL = 0.95


@dataclass(frozen=True)
class ChunkResult:
    index: int
    trials: int
    failed: int
    detected: int


@dataclass(frozen=True)
class MCReport:
    trials: int
    k: int
    delta: float
    eta: float
    detect_freq: float
    run_failure_freq: float
    analytic_p: float
    classical_p: float
    rng: RngSpec
    n_failed: int
    n_detected: int
    detect_ci: Tuple[float, float]
    failure_ci: Tuple[float, float]
    all_failed: bool
    chunk_size: int = DEFAULT_CHUNK_SIZE

    @property
    def expected_failure(self) -> float:
        return 1.0 - self.eta**self.k

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "k": self.k,
            "delta": self.delta,
            "eta": self.eta,
            "detect_freq": self.detect_freq,
            "detect_ci": list(self.detect_ci),
            "run_failure_freq": self.run_failure_freq,
            "failure_ci": list(self.failure_ci),
            "expected_failure": self.expected_failure,
            "analytic_p": self.analytic_p,
            "classical_p": self.classical_p,
            "n_failed": self.n_failed,
            "n_detected": self.n_detected,
            "all_failed": self.all_failed,
            "chunk_size": self.chunk_size,
            "rng": self.rng.as_dict(),
        }


def wilson_interval(successes: int, n: int, confidence: float = CONFIDENCE_LEVEL) -> Tuple[float, float]:
    if n == 0:
        return (math.nan, math.nan)
    ci = binomtest(successes, n).proportion_ci(confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def chunk_sizes(trials: int, chunk_size: int) -> List[int]:
    full, rest = divmod(trials, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def simulate_chunk(
    k: int,
    delta: float,
    eta: float,
    trials: int,
    spec: RngSpec,
    defer_correction: bool = False,
) -> Tuple[int, int]:
    """(failed runs, detections among the surviving runs) for one chunk."""
    rng = spec.generator()
    lost = rng.random((trials, k)) >= eta
    survived = int(trials - np.count_nonzero(lost.any(axis=1)))
    if survived == 0:
        return trials, 0
    outcomes = simulate_batch(k, delta, survived, rng, defer_correction=defer_correction)
    return trials - survived, int(np.count_nonzero(outcomes))


def monte_carlo(
    k: int,
    delta: float,
    eta: float,
    trials: int,
    rng_spec: RngSpec,
    workers: Optional[int] = None,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    on_chunk: Optional[Callable[[ChunkResult], None]] = None,
    defer_correction: bool = False,
) -> MCReport:
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"eta must lie in [0, 1], got {eta}")
    if int(trials) != trials or trials < 1:
        raise ValidationError(f"trials must be a positive integer, got {trials}")
    if chunk_size < 1:
        raise ValidationError(f"chunk size must be positive, got {chunk_size}")
    analytic = detection_probability(k, delta)
    classical = classical_detection_probability(k, delta)

    sizes = chunk_sizes(int(trials), chunk_size)
    LOG.debug("Monte Carlo: %d trials in %d chunks, workers=%s", trials, len(sizes), workers)
    results: List[ChunkResult] = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        streams = rng_spec.spawn(len(sizes))
        futures = {
            executor.submit(simulate_chunk, k, delta, eta, n, streams[i], defer_correction): (i, n)
            for i, n in enumerate(sizes)
        }
        for future in concurrent.futures.as_completed(futures):
            i, n = futures[future]
            failed, detected = future.result()
            chunk = ChunkResult(index=i, trials=n, failed=failed, detected=detected)
            results.append(chunk)
            if on_chunk is not None:
                on_chunk(chunk)

    n_failed = sum(c.failed for c in results)
    n_detected = sum(c.detected for c in results)
    n_ok = int(trials) - n_failed
    all_failed = n_ok == 0
    if all_failed:
        LOG.warning("All %d runs failed (eta=%.4g, k=%d); no detection frequency", trials, eta, k)

    return MCReport(
        trials=int(trials),
        k=k,
        delta=delta,
        eta=eta,
        detect_freq=n_detected / n_ok if n_ok else math.nan,
        run_failure_freq=n_failed / trials,
        analytic_p=analytic,
        classical_p=classical,
        rng=rng_spec,
        n_failed=n_failed,
        n_detected=n_detected,
        detect_ci=wilson_interval(n_detected, n_ok),
        failure_ci=wilson_interval(n_failed, int(trials)),
        all_failed=all_failed,
        chunk_size=chunk_size,
    )
