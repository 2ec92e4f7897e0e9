from pathlib import Path
import math
import sys

import pytest

sys.path.append(str(Path(__file__).resolve().parents[1]))

from qatem.errors import ValidationError
from qatem.optics import (
    InteractionGeometry,
    electric_deflection,
    electron_kinematics,
    magnetic_deflection,
    photon_budget,
    photons_for_electric,
    photons_for_magnetic,
    plate_electrons,
    radiation_budget,
    which_way_report,
    work_closed_form,
)
from qatem.physcore import CONSTANTS

UEV = 1e-6 * CONSTANTS.e


def test_kinematics_low_energy() -> None:
    beam = electron_kinematics(100 * CONSTANTS.e)
    assert beam.wavelength == pytest.approx(1.2264e-10, rel=1e-4)
    assert beam.beta == pytest.approx(0.019783, rel=1e-3)
    assert beam.pulse_width is None


def test_kinematics_relativistic() -> None:
    beam = electron_kinematics(300e3 * CONSTANTS.e, tau=1e-12)
    assert beam.beta == pytest.approx(0.7765, rel=1e-4)
    assert beam.wavelength == pytest.approx(1.9687e-12, rel=1e-4)
    assert beam.gamma == pytest.approx(1.0 + 300.0 / 510.99895, rel=1e-9)
    assert beam.velocity == pytest.approx(0.7765 * CONSTANTS.c, rel=1e-4)
    assert beam.pulse_width == 1e-12


@pytest.mark.parametrize("energy,tau", [(0.0, None), (-1.0, None), (1e-17, 0.0)])
def test_kinematics_rejects_bad_input(energy: float, tau) -> None:
    with pytest.raises(ValidationError):
        electron_kinematics(energy, tau=tau)


def test_geometry_must_be_positive() -> None:
    with pytest.raises(ValidationError):
        InteractionGeometry(d=0.0)
    with pytest.raises(ValidationError):
        InteractionGeometry(d=1e-6, L_drift=-1.0)


def test_one_flux_quantum_deflection() -> None:
    beam = electron_kinematics(100 * CONSTANTS.e)
    geom = InteractionGeometry(d=1e-6, l=1e-6, L_drift=0.1)
    report = magnetic_deflection(beam, geom, CONSTANTS.phi0)
    assert report.theta == pytest.approx(6.13e-5, rel=1e-3)
    assert report.theta == pytest.approx(beam.wavelength / (2 * geom.d), rel=1e-12)
    assert report.ratio_diffraction == pytest.approx(0.5, rel=1e-12)
    assert report.ratio_aharonov_bohm == pytest.approx(1.0, rel=1e-12)
    assert not report.distinguishable
    assert report.beam_shift == pytest.approx(6.13e-6, rel=1e-3)
    assert report.interaction_time == pytest.approx(geom.l / beam.velocity)


def test_two_flux_quanta_reach_diffraction_limit() -> None:
    beam = electron_kinematics(100 * CONSTANTS.e)
    report = magnetic_deflection(beam, InteractionGeometry(d=1e-6), 2 * CONSTANTS.phi0)
    assert report.ratio_diffraction == pytest.approx(1.0, rel=1e-12)
    assert report.beam_shift is None
    payload = report.as_dict()
    assert payload["theta_urad"] == pytest.approx(report.theta * 1e6)
    assert "beam_shift_um" not in payload


def test_phi0_threshold_uses_half_spread() -> None:
    beam = electron_kinematics(100 * CONSTANTS.e)
    report = magnetic_deflection(beam, InteractionGeometry(d=1e-6), CONSTANTS.phi0, threshold="phi0")
    assert report.distinguishability == pytest.approx(1.0, rel=1e-12)


def test_magnetic_deflection_validation() -> None:
    beam = electron_kinematics(100 * CONSTANTS.e)
    with pytest.raises(ValidationError):
        magnetic_deflection(beam, InteractionGeometry(d=1e-6), -1e-15)
    with pytest.raises(ValidationError, match="threshold"):
        magnetic_deflection(beam, InteractionGeometry(d=1e-6), 1e-15, threshold="3phi0")


def test_zero_flux_gives_zero_angle() -> None:
    beam = electron_kinematics(100 * CONSTANTS.e)
    report = magnetic_deflection(beam, InteractionGeometry(d=1e-6, L_drift=1.0), 0.0)
    assert report.theta == 0.0
    assert report.beam_shift == 0.0


@pytest.mark.parametrize(
    "deflect, source",
    [(magnetic_deflection, CONSTANTS.phi0), (electric_deflection, 55 * CONSTANTS.e)],
)
def test_angle_does_not_depend_on_interaction_length(deflect, source: float) -> None:
    beam = electron_kinematics(300e3 * CONSTANTS.e)
    short = deflect(beam, InteractionGeometry(d=1e-6, l=1e-7), source)
    for l in (1e-6, 1e-5, 1e-4):
        report = deflect(beam, InteractionGeometry(d=1e-6, l=l), source)
        assert report.theta == pytest.approx(short.theta, rel=1e-12)
        assert report.interaction_time == pytest.approx(short.interaction_time * l / 1e-7, rel=1e-12)


@pytest.mark.parametrize(
    "deflect, unit",
    [(magnetic_deflection, CONSTANTS.phi0), (electric_deflection, CONSTANTS.e)],
)
@pytest.mark.parametrize("scale", [0.5, 3.0, 40.0])
def test_angle_is_linear_in_the_source(deflect, unit: float, scale: float) -> None:
    beam = electron_kinematics(100 * CONSTANTS.e)
    geom = InteractionGeometry(d=1e-6)
    base = deflect(beam, geom, unit).theta
    assert deflect(beam, geom, scale * unit).theta == pytest.approx(scale * base, rel=1e-12)


@pytest.mark.parametrize("energy_eV", [100.0, 10e3, 300e3])
def test_plate_charge_deflects_by_one_spread(energy_eV: float) -> None:
    beam = electron_kinematics(energy_eV * CONSTANTS.e)
    q = plate_electrons(beam.beta) * CONSTANTS.e
    for d in (1e-7, 1e-6, 1e-5):
        report = electric_deflection(beam, InteractionGeometry(d=d), q)
        assert report.ratio_diffraction == pytest.approx(1.0, rel=1e-8)


def test_plate_electron_count() -> None:
    assert plate_electrons(0.8) == pytest.approx(54.81, rel=1e-3)
    with pytest.raises(ValidationError):
        plate_electrons(1.0)
    with pytest.raises(ValidationError):
        plate_electrons(0.0)


def test_work_direct_and_closed_form() -> None:
    beam = electron_kinematics(300e3 * CONSTANTS.e)
    geom = InteractionGeometry(d=1e-6)
    q = plate_electrons(beam.beta) * CONSTANTS.e
    direct = electric_deflection(beam, geom, q).work
    assert 1.4 * UEV < direct < 1.6 * UEV
    closed = work_closed_form(beam, geom)
    assert closed.coulomb_energy / CONSTANTS.e == pytest.approx(18.1e-3, rel=1e-2)
    assert closed.prefactor == pytest.approx(1.397e4, rel=1e-2)
    assert closed.work / UEV == pytest.approx(8.95, rel=1e-2)


def test_work_scales_with_charge_squared() -> None:
    beam = electron_kinematics(300e3 * CONSTANTS.e)
    geom = InteractionGeometry(d=1e-6)
    one = electric_deflection(beam, geom, 10 * CONSTANTS.e)
    two = electric_deflection(beam, geom, 20 * CONSTANTS.e)
    assert two.work == pytest.approx(4 * one.work, rel=1e-12)
    assert two.theta == pytest.approx(2 * one.theta, rel=1e-12)
    assert one.as_dict()["work_ueV"] == pytest.approx(one.work / UEV)
    with pytest.raises(ValidationError):
        electric_deflection(beam, geom, -CONSTANTS.e)


def test_photon_counts() -> None:
    assert photons_for_magnetic(CONSTANTS.Z0) == pytest.approx(215.2, rel=1e-3)
    assert photons_for_magnetic(50.0) == pytest.approx(math.pi * CONSTANTS.R_K / 50.0)
    electric = photons_for_electric(CONSTANTS.Z0, 0.8)
    assert electric.n_photons == pytest.approx(137.8, rel=1e-3)
    assert electric.ratio_to_magnetic == pytest.approx(0.64, rel=1e-12)
    assert photons_for_electric(CONSTANTS.Z0, 1.0).ratio_to_magnetic == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        photons_for_magnetic(0.0)
    with pytest.raises(ValidationError):
        photons_for_electric(50.0, 1.5)


def test_photon_budget_bundles_counts() -> None:
    budget = photon_budget(CONSTANTS.Z0, 0.8)
    assert budget.n_photons_magnetic == pytest.approx(photons_for_magnetic(CONSTANTS.Z0))
    assert budget.n_electrons_plate == pytest.approx(plate_electrons(0.8))
    assert budget.n_photons_electric / budget.n_photons_magnetic == pytest.approx(0.64)


def test_which_way_long_pulse_fails() -> None:
    beam = electron_kinematics(300e3 * CONSTANTS.e, tau=10e-12)
    report = which_way_report(beam, 2 * math.pi * 5e9, 1.5 * UEV)
    assert report.delta_E / UEV == pytest.approx(65.8, rel=1e-2)
    assert report.photon_energy / UEV == pytest.approx(20.7, rel=1e-2)
    assert report.energy_ratio == pytest.approx(3.18, rel=1e-2)
    assert not report.energy_ok
    assert report.work_ok
    assert not report.hides_which_way


def test_which_way_short_pulse_passes() -> None:
    beam = electron_kinematics(300e3 * CONSTANTS.e, tau=1e-12)
    report = which_way_report(beam, 2 * math.pi * 5e9, 1.5 * UEV)
    assert report.energy_ratio == pytest.approx(31.8, rel=1e-2)
    assert report.pulse_ratio == pytest.approx(200.0, rel=1e-9)
    assert report.energy_ok and report.pulse_ok
    assert report.hides_which_way
    payload = report.as_dict()
    assert payload["hides_which_way"] is True
    assert payload["delta_E_ueV"] == pytest.approx(658.2, rel=1e-2)


def test_which_way_needs_pulse_width() -> None:
    beam = electron_kinematics(300e3 * CONSTANTS.e)
    with pytest.raises(ValidationError, match="pulse width"):
        which_way_report(beam, 1e10, 0.0)


def test_radiation_budget() -> None:
    budget = radiation_budget(300.0, 60.0, 1e-10)
    assert budget.hole_flux == pytest.approx(45.9e-9, rel=1e-2)
    assert budget.shield_factor == pytest.approx(625.0, rel=1e-12)
    assert budget.wien_peak == pytest.approx(9.66e-6, rel=1e-3)
    assert radiation_budget(300.0, 0.0, 1e-10).shield_factor is None


@pytest.mark.parametrize("t_hot,t_shield,area", [(60.0, 60.0, 1e-10), (300.0, -1.0, 1e-10), (300.0, 4.0, 0.0)])
def test_radiation_budget_validation(t_hot: float, t_shield: float, area: float) -> None:
    with pytest.raises(ValidationError):
        radiation_budget(t_hot, t_shield, area)
