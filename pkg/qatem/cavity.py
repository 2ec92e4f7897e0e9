"""
Resonator + qubit physics in the Jaynes-Cummings picture.

Basis ordering on the truncated space is |n, m> -> index 2n + m with the Fock
number n in 0..n_max and the qubit state m in {0, 1}. The coupling energy
g = lambda * Delta is stored as the primitive; lambda is derived from it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.special import gammaln
from scipy.stats import poisson

from .circuits.spectrum import FluxSpectrum, flux_matrix_element
from .errors import RegimeError, ResonanceError, ValidationError
from .physcore import CONSTANTS

LOG = logging.getLogger(__name__)

DISPERSIVE_GUARD = 0.3
MIN_FOCK_CUTOFF = 20
TRUNCATION_LIMIT = 1e-8

SWEEP_COLUMNS = ["lambda", "max_residual_J"]
RESIDUAL_COLUMNS = ["n", "m", "block", "level_exact_J", "level_eff_J", "residual_J"]

SIGMA = np.array([[0.0, 1.0], [0.0, 0.0]])


@dataclass(frozen=True)
class ResonatorParams:
    L_r: float
    C_r: float
    L_tilde: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("L_r", "C_r"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(f"{name} must be positive, got {value}")
        if self.L_tilde is not None and not self.L_tilde > 0:
            raise ValidationError(f"L_tilde must be positive, got {self.L_tilde}")

    @classmethod
    def from_frequency(cls, f_r: float, Z_r: float, L_tilde: Optional[float] = None) -> "ResonatorParams":
        """Resonator with frequency f_r (Hz) and characteristic impedance Z_r (Ohm)."""
        if not f_r > 0 or not Z_r > 0:
            raise ValidationError(f"f_r and Z_r must be positive, got {f_r}, {Z_r}")
        omega = 2.0 * math.pi * f_r
        return cls(L_r=Z_r / omega, C_r=1.0 / (Z_r * omega), L_tilde=L_tilde)

    @property
    def omega_r(self) -> float:
        return 1.0 / math.sqrt(self.L_r * self.C_r)

    @property
    def Z_r(self) -> float:
        return math.sqrt(self.L_r / self.C_r)

    @property
    def phi_zpf(self) -> float:
        L = self.L_tilde if self.L_tilde is not None else self.L_r
        return math.sqrt(L * CONSTANTS.hbar * self.omega_r / 2.0)


@dataclass(frozen=True)
class JchSystem:
    omega_r: float
    omega_q: float
    g: float
    n_max: int

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValidationError(f"n_max must be >= 1, got {self.n_max}")
        if not (self.omega_r > 0 and self.omega_q > 0):
            raise ValidationError(f"frequencies must be positive, got {self.omega_r}, {self.omega_q}")
        if not math.isfinite(self.g):
            raise ValidationError(f"coupling must be finite, got {self.g}")

    @classmethod
    def from_lambda(cls, omega_r: float, omega_q: float, lambda_c: float, n_max: int) -> "JchSystem":
        delta = CONSTANTS.hbar * (omega_q - omega_r)
        if delta == 0.0:
            raise ResonanceError("lambda is undefined at resonance; give the coupling energy g instead")
        return cls(omega_r=omega_r, omega_q=omega_q, g=lambda_c * delta, n_max=n_max)

    @property
    def Delta(self) -> float:
        return CONSTANTS.hbar * (self.omega_q - self.omega_r)

    @property
    def lambda_c(self) -> float:
        if self.Delta == 0.0:
            raise ResonanceError(
                f"resonant system (omega_q = omega_r = {self.omega_r:.6g} rad/s): lambda = g/Delta undefined"
            )
        return self.g / self.Delta

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)


def ladder_operators(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """(a, sigma) on the (n_max+1) x 2 space."""
    a_cav = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)
    a = np.kron(a_cav, np.eye(2))
    sigma = np.kron(np.eye(n_max + 1), SIGMA)
    return a, sigma


def excitation_number(n_max: int) -> np.ndarray:
    a, sigma = ladder_operators(n_max)
    return a.T @ a + sigma.T @ sigma


def build_jch(sys: JchSystem, rwa: bool = True) -> np.ndarray:
    """H = hbar w_r a+a + hbar w_q s+s + g (a+a+)(s+s+), or g (a+ s + a s+) under the RWA."""
    if sys.n_max < 2:
        LOG.warning("n_max=%d leaves no full excitation block below the Fock cutoff", sys.n_max)
    a, sigma = ladder_operators(sys.n_max)
    hbar = CONSTANTS.hbar
    H = hbar * sys.omega_r * (a.T @ a) + hbar * sys.omega_q * (sigma.T @ sigma)
    if rwa:
        H = H + sys.g * (a.T @ sigma + a @ sigma.T)
    else:
        H = H + sys.g * ((a + a.T) @ (sigma + sigma.T))
    return 0.5 * (H + H.T)


def effective_level(sys: JchSystem, n: int, m: int) -> float:
    """Second-order dispersive level (hbar w_r - l^2 D) n + [hbar w_q + 2 l^2 D (n + 1/2)] m."""
    chi = sys.g**2 / sys.Delta if sys.Delta != 0.0 else 0.0
    hbar = CONSTANTS.hbar
    return (hbar * sys.omega_r - chi) * n + (hbar * sys.omega_q + 2.0 * chi * (n + 0.5)) * m


def _block_levels(H: np.ndarray, N: int, delta: float) -> Dict[tuple, float]:
    """Exact levels of excitation block N keyed by the bare state they connect to."""
    if N == 0:
        return {(0, 0): float(H[0, 0])}
    idx = [2 * N, 2 * (N - 1) + 1]
    low, high = linalg.eigvalsh(H[np.ix_(idx, idx)])
    # qubit above the resonator: the photon-like level |N,0> is the lower one
    if delta >= 0:
        return {(N, 0): float(low), (N - 1, 1): float(high)}
    return {(N, 0): float(high), (N - 1, 1): float(low)}


def block_table(sys: JchSystem, H: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Exact RWA levels against H_eff for every Fock number n <= n_max - 2."""
    if H is None:
        H = build_jch(sys, rwa=True)
    rows: List[dict] = []
    for n in range(0, sys.n_max - 1):
        exact = {**_block_levels(H, n, sys.Delta), **_block_levels(H, n + 1, sys.Delta)}
        for m in (0, 1):
            level_exact = exact[(n, m)]
            level_eff = effective_level(sys, n, m)
            rows.append(
                {
                    "n": n,
                    "m": m,
                    "block": n + m,
                    "level_exact_J": level_exact,
                    "level_eff_J": level_eff,
                    "residual_J": abs(level_exact - level_eff),
                }
            )
    return pd.DataFrame(rows, columns=RESIDUAL_COLUMNS)


@dataclass(frozen=True, eq=False)
class DispersiveReport:
    """Second-order shifts; ``residuals`` holds the largest |exact - H_eff| of each excitation block."""

    qubit_shift_per_photon: float
    resonator_pull: float
    lamb_shift: float
    residuals: np.ndarray
    lambda_c: float
    Delta: float
    table: pd.DataFrame = field(repr=False, compare=False)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0

    def as_dict(self) -> dict:
        h_GHz = CONSTANTS.h * 1e9

        def both(value: float) -> dict:
            return {"J": value, "GHz": value / h_GHz, "ueV": value / CONSTANTS.e * 1e6}

        return {
            "lambda": self.lambda_c,
            "Delta": both(self.Delta),
            "qubit_shift_per_photon": both(self.qubit_shift_per_photon),
            "resonator_pull": both(self.resonator_pull),
            "lamb_shift": both(self.lamb_shift),
            "residuals_J": [float(r) for r in self.residuals],
            "residuals_GHz": [float(r) / h_GHz for r in self.residuals],
        }


def dispersive_transform(sys: JchSystem) -> DispersiveReport:
    lam = sys.lambda_c
    guard = abs(lam) * math.sqrt(sys.n_max + 1)
    if guard > DISPERSIVE_GUARD:
        raise RegimeError(
            f"|lambda| sqrt(n_max+1) = {guard:.3g} exceeds {DISPERSIVE_GUARD}; not in the dispersive regime"
        )
    chi = lam**2 * sys.Delta
    table = block_table(sys)
    # excitation blocks 0..n_max-2; block n_max-1 has only its |n_max-2, 1> row in the table
    complete = table[table["block"] <= sys.n_max - 2]
    residuals = complete.groupby("block")["residual_J"].max().to_numpy()
    LOG.debug("Dispersive: lambda=%.3g chi=%.4g J max residual %.3g J", lam, chi, residuals.max(initial=0.0))
    return DispersiveReport(
        qubit_shift_per_photon=2.0 * chi,
        resonator_pull=2.0 * chi,
        lamb_shift=chi,
        residuals=residuals,
        lambda_c=lam,
        Delta=sys.Delta,
        table=table,
    )


@dataclass(frozen=True)
class DispersiveSweep:
    table: pd.DataFrame
    slope: float


def dispersive_sweep(omega_r: float, omega_q: float, lambdas: Sequence[float], n_max: int) -> DispersiveSweep:
    """Max block residual per lambda and the log-log slope of residual against lambda."""
    rows = []
    for lam in lambdas:
        report = dispersive_transform(JchSystem.from_lambda(omega_r, omega_q, lam, n_max))
        rows.append({"lambda": float(lam), "max_residual_J": report.max_residual})
    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    usable = table[(table["lambda"] > 0) & (table["max_residual_J"] > 0)]
    slope = float("nan")
    if len(usable) >= 2:
        slope = float(np.polyfit(np.log(usable["lambda"]), np.log(usable["max_residual_J"]), 1)[0])
    LOG.info("Dispersive residual slope over %d points: %.3f", len(usable), slope)
    return DispersiveSweep(table=table, slope=slope)


def extract_jch_params(res: ResonatorParams, squid: FluxSpectrum, L_c: float, n_max: int = 10) -> JchSystem:
    """JC parameters for a resonator magnetically coupled to a two-level-truncated flux qubit.

    Only the two lowest qubit levels are kept. g = phi_zpf <0|phi|1> / L_c, and
    L_c = inf decouples the pair.
    """
    if squid.n_levels < 2:
        raise ValidationError("the qubit spectrum needs at least two levels")
    if not L_c > 0:
        raise ValidationError(f"L_c must be positive, got {L_c}")
    omega_q = float(squid.energies[1] - squid.energies[0]) / CONSTANTS.hbar
    phi01 = flux_matrix_element(squid).phi01
    g = 0.0 if math.isinf(L_c) else res.phi_zpf * phi01 / L_c
    system = JchSystem(omega_r=res.omega_r, omega_q=omega_q, g=g, n_max=n_max)
    if system.Delta == 0.0:
        raise ResonanceError(f"qubit and resonator are resonant at {res.omega_r:.6g} rad/s; g = {g:.4g} J")
    LOG.debug("Coupled pair: w_q=%.6g w_r=%.6g rad/s g=%.4g J lambda=%.4g", omega_q, res.omega_r, g, system.lambda_c)
    return system


@dataclass(frozen=True, eq=False)
class ConditionalState:
    """(|alpha>|0> + |0_cav>|1>) normalized, amplitudes indexed 2n + m."""

    amplitudes: np.ndarray
    n_bar: float
    n_max: int
    truncated_mass: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def branch_distribution(self, m: int) -> np.ndarray:
        """Normalized photon-number distribution of the branch with qubit state m."""
        probs = np.abs(self.amplitudes[m::2]) ** 2
        return probs / probs.sum()

    def branch_moments(self, m: int = 0) -> tuple[float, float]:
        p = self.branch_distribution(m)
        n = np.arange(p.size)
        mean = float(np.dot(n, p))
        return mean, float(np.dot((n - mean) ** 2, p))


def default_cutoff(n_bar: float) -> int:
    return max(math.ceil(n_bar + 10.0 * math.sqrt(n_bar + 1.0)), MIN_FOCK_CUTOFF)


def coherent_amplitudes(n_bar: float, n_max: int) -> np.ndarray:
    """Real coherent-state amplitudes sqrt(Poisson(n; n_bar)) for n = 0..n_max."""
    n = np.arange(n_max + 1)
    if n_bar == 0.0:
        return (n == 0).astype(float)
    log_c = -0.5 * n_bar + 0.5 * n * math.log(n_bar) - 0.5 * gammaln(n + 1)
    return np.exp(log_c)


def conditional_cavity_state(n_bar: float, n_max: Optional[int] = None) -> ConditionalState:
    if not n_bar >= 0:
        raise ValidationError(f"n_bar must be >= 0, got {n_bar}")
    n_max = default_cutoff(n_bar) if n_max is None else n_max
    truncated = float(poisson.sf(n_max, n_bar)) if n_bar > 0 else 0.0
    if truncated > TRUNCATION_LIMIT:
        raise ValidationError(
            f"Fock cutoff {n_max} truncates {truncated:.2e} of the coherent branch (n_bar={n_bar})"
        )
    psi = np.zeros(2 * (n_max + 1), dtype=complex)
    psi[0::2] = coherent_amplitudes(n_bar, n_max)
    psi[1] += 1.0
    psi /= np.linalg.norm(psi)
    return ConditionalState(amplitudes=psi, n_bar=n_bar, n_max=n_max, truncated_mass=truncated)


@dataclass(frozen=True)
class RegimeReport:
    T: float
    omega: float
    thermal_energy: float
    photon_energy: float
    gap: float
    kT_ok: bool
    gap_ok: bool
    kT_margin_ueV: float
    gap_margin_ueV: float
    n_thermal: float

    def as_dict(self) -> dict:
        to_ueV = 1e6 / CONSTANTS.e
        return {
            "T_K": self.T,
            "omega_rad_s": self.omega,
            "kT_ueV": self.thermal_energy * to_ueV,
            "hbar_omega_ueV": self.photon_energy * to_ueV,
            "gap_ueV": self.gap * to_ueV,
            "kT_ok": self.kT_ok,
            "gap_ok": self.gap_ok,
            "kT_margin_ueV": self.kT_margin_ueV,
            "gap_margin_ueV": self.gap_margin_ueV,
            "n_thermal": self.n_thermal,
        }


def regime_check(T: float, omega: float) -> RegimeReport:
    """k_B T < hbar omega < Delta_Al, with margins in ueV."""
    if not T >= 0:
        raise ValidationError(f"temperature must be >= 0, got {T}")
    if not omega > 0:
        raise ValidationError(f"omega must be positive, got {omega}")
    kT = CONSTANTS.k_B * T
    e_photon = CONSTANTS.hbar * omega
    gap = CONSTANTS.Delta_Al
    to_ueV = 1e6 / CONSTANTS.e
    x = math.inf if T == 0 else e_photon / kT
    n_th = 0.0 if x > 700.0 else 1.0 / math.expm1(x)
    return RegimeReport(
        T=T,
        omega=omega,
        thermal_energy=kT,
        photon_energy=e_photon,
        gap=gap,
        kT_ok=kT < e_photon,
        gap_ok=e_photon < gap,
        kT_margin_ueV=(e_photon - kT) * to_ueV,
        gap_margin_ueV=(gap - e_photon) * to_ueV,
        n_thermal=n_th,
    )
