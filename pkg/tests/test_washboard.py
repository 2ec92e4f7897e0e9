from pathlib import Path
import math
import sys

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[1]))

from qatem.circuits.washboard import barrier_closed_form, critical_current, josephson_energy, washboard_analysis
from qatem.errors import ValidationError
from qatem.physcore import CONSTANTS

E_J = 3.2494e-22
C = 2e-15


def test_critical_current_examples() -> None:
    assert critical_current(CONSTANTS.phi0 / (2 * math.pi)) == pytest.approx(1.0, rel=1e-15)
    e_j = josephson_energy(15e-6)
    assert e_j == pytest.approx(4.94e-21, rel=1e-3)
    assert e_j / CONSTANTS.e * 1e3 == pytest.approx(30.8, rel=1e-3)
    assert josephson_energy(critical_current(E_J)) == pytest.approx(E_J, rel=1e-14)


@pytest.mark.parametrize("func", [critical_current, josephson_energy])
def test_non_positive_inputs(func) -> None:
    with pytest.raises(ValidationError):
        func(0.0)


def test_zero_bias_barrier_is_twice_ej() -> None:
    report = washboard_analysis(E_J, C, 0.0)
    assert report.barrier_height == pytest.approx(2 * E_J, rel=1e-12)
    assert report.phi_min == 0.0
    assert report.phi_max == pytest.approx(-CONSTANTS.phi0 / 2, rel=1e-12)


def test_barrier_vanishes_at_critical_current() -> None:
    I_c = critical_current(E_J)
    assert washboard_analysis(E_J, C, I_c).barrier_height == 0.0
    assert washboard_analysis(E_J, C, 1.5 * I_c).phi_min is None
    assert washboard_analysis(E_J, C, I_c * (1 - 1e-6)).barrier_height < 1e-8 * E_J


def test_half_critical_current_matches_closed_form() -> None:
    I_b = 0.5 * critical_current(E_J)
    report = washboard_analysis(E_J, C, I_b)
    assert 0 < report.barrier_height < 2 * E_J
    assert report.barrier_height == pytest.approx(barrier_closed_form(E_J, I_b), rel=1e-9)


def test_barrier_decreases_monotonically() -> None:
    I_c = critical_current(E_J)
    heights = [washboard_analysis(E_J, C, s * I_c).barrier_height for s in np.linspace(0.0, 0.99, 100)]
    assert np.all(np.diff(heights) < 0)


def test_negative_bias_mirrors_positive() -> None:
    I_b = 0.3 * critical_current(E_J)
    pos = washboard_analysis(E_J, C, I_b)
    neg = washboard_analysis(E_J, C, -I_b)
    assert neg.barrier_height == pytest.approx(pos.barrier_height, rel=1e-14)
    assert neg.phi_min == pytest.approx(-pos.phi_min)


def test_plasma_frequency_softens_with_bias() -> None:
    I_c = critical_current(E_J)
    zero = washboard_analysis(E_J, C, 0.0).plasma_frequency
    assert zero == pytest.approx(math.sqrt(2 * math.pi * I_c / (CONSTANTS.phi0 * C)), rel=1e-14)
    assert washboard_analysis(E_J, C, 0.9 * I_c).plasma_frequency < zero


def test_capacitance_must_be_positive() -> None:
    with pytest.raises(ValidationError):
        washboard_analysis(E_J, 0.0, 0.0)
