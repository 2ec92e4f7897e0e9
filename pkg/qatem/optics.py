"""
Electron-beam side of the detector: kinematics, deflection by a flux loop or a
charged plate pair, photon and charge budgets, which-way bounds and the
thermal-radiation figures for a cold specimen stage.

Fields are the static uniform-field estimates: B = phi/(l d), E = q/(eps0 d l),
and an impulse Delta p = F l / v. The length l cancels in every angle.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import ValidationError
from .physcore import CONSTANTS

LOG = logging.getLogger(__name__)

WHICH_WAY_MARGIN = 10.0
THRESHOLDS = ("2phi0", "phi0")


@dataclass(frozen=True)
class BeamParameters:
    kinetic_energy: float
    wavelength: float
    beta: float
    momentum: float
    pulse_width: Optional[float] = None

    @property
    def velocity(self) -> float:
        return self.beta * CONSTANTS.c

    @property
    def gamma(self) -> float:
        return 1.0 + self.kinetic_energy / CONSTANTS.m_e_c2


@dataclass(frozen=True)
class InteractionGeometry:
    d: float
    l: float = 1e-6
    L_drift: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("d", "l", "L_drift"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValidationError(f"geometry {name} must be positive, got {value}")


@dataclass(frozen=True)
class DeflectionReport:
    theta: float
    diffraction_spread: float
    distinguishability: float
    threshold: str
    beam_shift: Optional[float]
    interaction_time: float
    work: Optional[float] = None
    ratio_diffraction: float = 0.0
    ratio_aharonov_bohm: Optional[float] = None

    @property
    def distinguishable(self) -> bool:
        return self.distinguishability >= 1.0

    def as_dict(self) -> dict:
        out = asdict(self)
        out["distinguishable"] = self.distinguishable
        out["theta_urad"] = self.theta * 1e6
        if self.beam_shift is not None:
            out["beam_shift_um"] = self.beam_shift * 1e6
        if self.work is not None:
            out["work_ueV"] = self.work / CONSTANTS.e * 1e6
        return out


def electron_kinematics(kinetic_energy: float, tau: Optional[float] = None) -> BeamParameters:
    """Relativistic beta, momentum and de Broglie wavelength of an electron."""
    if not kinetic_energy > 0:
        raise ValidationError(f"kinetic energy must be positive, got {kinetic_energy}")
    if tau is not None and not tau > 0:
        raise ValidationError(f"pulse width must be positive, got {tau}")
    mc2 = CONSTANTS.m_e_c2
    pc = math.sqrt(kinetic_energy * (kinetic_energy + 2.0 * mc2))
    p = pc / CONSTANTS.c
    return BeamParameters(
        kinetic_energy=kinetic_energy,
        wavelength=CONSTANTS.h / p,
        beta=pc / (kinetic_energy + mc2),
        momentum=p,
        pulse_width=tau,
    )


def magnetic_deflection(
    beam: BeamParameters,
    geom: InteractionGeometry,
    flux: float,
    threshold: str = "2phi0",
) -> DeflectionReport:
    """theta = e phi / (p d), i.e. (lambda / 2d)(phi / phi0).

    ``threshold`` picks the criterion for ``distinguishability``: "2phi0"
    compares theta with the diffraction spread lambda/d, "phi0" with lambda/2d.
    """
    if flux < 0:
        raise ValidationError(f"flux must be >= 0, got {flux}")
    if threshold not in THRESHOLDS:
        raise ValidationError(f"threshold must be one of {THRESHOLDS}, got '{threshold}'")
    theta = CONSTANTS.e * flux / (beam.momentum * geom.d)
    spread = beam.wavelength / geom.d
    ratio_diffraction = theta / spread
    ratio_ab = 2.0 * ratio_diffraction
    return DeflectionReport(
        theta=theta,
        diffraction_spread=spread,
        distinguishability=ratio_diffraction if threshold == "2phi0" else ratio_ab,
        threshold=threshold,
        beam_shift=geom.L_drift * theta if geom.L_drift is not None else None,
        interaction_time=geom.l / beam.velocity,
        ratio_diffraction=ratio_diffraction,
        ratio_aharonov_bohm=ratio_ab,
    )


def electric_deflection(beam: BeamParameters, geom: InteractionGeometry, q: float) -> DeflectionReport:
    """theta = e q / (p eps0 d v); work W = (e q / eps0 d)^2 / (2 beta^2 m_e c^2)."""
    if q < 0:
        raise ValidationError(f"plate charge must be >= 0, got {q}")
    impulse = CONSTANTS.e * q / (CONSTANTS.eps0 * geom.d * beam.velocity)
    theta = impulse / beam.momentum
    work = (CONSTANTS.e * q / (CONSTANTS.eps0 * geom.d)) ** 2 / (2.0 * beam.beta**2 * CONSTANTS.m_e_c2)
    spread = beam.wavelength / geom.d
    return DeflectionReport(
        theta=theta,
        diffraction_spread=spread,
        distinguishability=theta / spread,
        threshold="lambda/d",
        beam_shift=geom.L_drift * theta if geom.L_drift is not None else None,
        interaction_time=geom.l / beam.velocity,
        work=work,
        ratio_diffraction=theta / spread,
    )


@dataclass(frozen=True)
class WorkEstimate:
    work: float
    coulomb_energy: float
    prefactor: float


def work_closed_form(beam: BeamParameters, geom: InteractionGeometry) -> WorkEstimate:
    """pi^2 beta^2 / (8 alpha^2) * (e^2 / eps0 d)^2 / m_e c^2."""
    coulomb = CONSTANTS.e**2 / (CONSTANTS.eps0 * geom.d)
    prefactor = math.pi**2 * beam.beta**2 / (8.0 * CONSTANTS.alpha**2)
    return WorkEstimate(work=prefactor * coulomb**2 / CONSTANTS.m_e_c2, coulomb_energy=coulomb, prefactor=prefactor)


def plate_electrons(beta: float) -> float:
    """Plate charge in units of e that deflects by exactly lambda/d: beta R_K / Z0."""
    _check_beta(beta)
    return beta * CONSTANTS.R_K / CONSTANTS.Z0


def photons_for_magnetic(Z_r: float) -> float:
    if not Z_r > 0:
        raise ValidationError(f"Z_r must be positive, got {Z_r}")
    return math.pi * CONSTANTS.R_K / Z_r


@dataclass(frozen=True)
class ElectricPhotonCount:
    n_photons: float
    ratio_to_magnetic: float


def photons_for_electric(Z_r: float, beta: float) -> ElectricPhotonCount:
    if not Z_r > 0:
        raise ValidationError(f"Z_r must be positive, got {Z_r}")
    _check_beta(beta, upper_inclusive=True)
    n = math.pi * beta**2 * CONSTANTS.R_K * Z_r / CONSTANTS.Z0**2
    return ElectricPhotonCount(n_photons=n, ratio_to_magnetic=beta**2 * (Z_r / CONSTANTS.Z0) ** 2)


@dataclass(frozen=True)
class PhotonBudget:
    n_photons_magnetic: float
    n_electrons_plate: float
    n_photons_electric: float
    Z_r: float


def photon_budget(Z_r: float, beta: float) -> PhotonBudget:
    return PhotonBudget(
        n_photons_magnetic=photons_for_magnetic(Z_r),
        n_electrons_plate=plate_electrons(beta),
        n_photons_electric=photons_for_electric(Z_r, beta).n_photons,
        Z_r=Z_r,
    )


@dataclass(frozen=True)
class WhichWayReport:
    delta_E: float
    photon_energy: float
    work: float
    energy_ratio: float
    work_ratio: float
    pulse_ratio: float
    energy_ok: bool
    work_ok: bool
    pulse_ok: bool

    @property
    def hides_which_way(self) -> bool:
        return self.energy_ok and self.work_ok

    def as_dict(self) -> dict:
        to_ueV = 1e6 / CONSTANTS.e
        out = asdict(self)
        out.update(
            hides_which_way=self.hides_which_way,
            delta_E_ueV=self.delta_E * to_ueV,
            photon_energy_ueV=self.photon_energy * to_ueV,
            work_ueV=self.work * to_ueV,
        )
        return out


def which_way_report(
    beam: BeamParameters,
    omega_r: float,
    W: float,
    margin: float = WHICH_WAY_MARGIN,
) -> WhichWayReport:
    """Whether the pulse energy spread hbar/tau buries the work W done on the resonator.

    Needs hbar/tau >= margin * hbar w_r and W <= margin * hbar w_r. The pulse
    condition tau * margin <= 2 pi / w_r is reported alongside.
    """
    if beam.pulse_width is None:
        raise ValidationError("which-way analysis needs a pulse width tau")
    if not omega_r > 0:
        raise ValidationError(f"omega_r must be positive, got {omega_r}")
    if W < 0:
        raise ValidationError(f"work must be >= 0, got {W}")
    tau = beam.pulse_width
    delta_E = CONSTANTS.hbar / tau
    e_photon = CONSTANTS.hbar * omega_r
    pulse_ratio = (2.0 * math.pi / omega_r) / tau
    report = WhichWayReport(
        delta_E=delta_E,
        photon_energy=e_photon,
        work=W,
        energy_ratio=delta_E / e_photon,
        work_ratio=W / e_photon,
        pulse_ratio=pulse_ratio,
        energy_ok=delta_E >= margin * e_photon,
        work_ok=W <= margin * e_photon,
        pulse_ok=pulse_ratio >= margin,
    )
    LOG.debug("Which-way: dE/hw=%.3g W/hw=%.3g", report.energy_ratio, report.work_ratio)
    return report


@dataclass(frozen=True)
class RadiationBudget:
    hole_flux: float
    shield_factor: Optional[float]
    wien_peak: float


def radiation_budget(T_hot: float, T_shield: float, aperture_area: float) -> RadiationBudget:
    if not T_shield >= 0 or not T_hot > T_shield:
        raise ValidationError(f"need T_hot > T_shield >= 0, got {T_hot} K and {T_shield} K")
    if not aperture_area > 0:
        raise ValidationError(f"aperture area must be positive, got {aperture_area}")
    return RadiationBudget(
        hole_flux=CONSTANTS.sigma_SB * T_hot**4 * aperture_area,
        shield_factor=(T_hot / T_shield) ** 4 if T_shield > 0 else None,
        wien_peak=CONSTANTS.b_wien / T_hot,
    )


def _check_beta(beta: float, upper_inclusive: bool = False) -> None:
    ok = 0 < beta <= 1 if upper_inclusive else 0 < beta < 1
    if not ok:
        raise ValidationError(f"beta must lie in (0, 1), got {beta}")
