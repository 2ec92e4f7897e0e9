from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import ValidationError
from ..physcore import CONSTANTS

LOG = logging.getLogger(__name__)

# |I_b| / I_c at or above this counts as the barrier having vanished
CRITICAL_TOLERANCE = 1e-12
_RTOL = 4 * np.finfo(float).eps


def critical_current(E_J: float) -> float:
    """I_c = 2 pi E_J / phi0."""
    if not E_J > 0:
        raise ValidationError(f"E_J must be positive, got {E_J}")
    return 2.0 * math.pi * E_J / CONSTANTS.phi0


def josephson_energy(I_c: float) -> float:
    """Inverse of critical_current."""
    if not I_c > 0:
        raise ValidationError(f"critical current must be positive, got {I_c}")
    return I_c * CONSTANTS.phi0 / (2.0 * math.pi)


@dataclass(frozen=True)
class WashboardReport:
    I_b: float
    I_c: float
    barrier_height: float
    phi_min: float | None
    phi_max: float | None
    plasma_frequency: float


def washboard_analysis(E_J: float, C: float, I_b: float) -> WashboardReport:
    """Barrier of V(phi) = I_b phi - E_J cos(2 pi phi/phi0) between a minimum and its escape maximum.

    Works in x = 2 pi phi/phi0, where V/E_J = s x - cos x with s = I_b/I_c. For
    s >= 0 the well at x_min = -asin(s) escapes over x_max = -pi + asin(s)
    (downhill side); negative bias is the mirror image.
    """
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    I_c = critical_current(E_J)
    s = abs(I_b) / I_c
    if s >= 1.0 - CRITICAL_TOLERANCE:
        LOG.debug("Bias %.4g A at or beyond I_c %.4g A: no barrier", I_b, I_c)
        return WashboardReport(I_b=I_b, I_c=I_c, barrier_height=0.0, phi_min=None, phi_max=None, plasma_frequency=0.0)

    def slope(x: float) -> float:
        return s + math.sin(x)

    def v(x: float) -> float:
        return s * x - math.cos(x)

    x_min = brentq(slope, -0.5 * math.pi, 0.0, xtol=1e-15, rtol=_RTOL) if s > 0 else 0.0
    x_max = brentq(slope, -1.5 * math.pi, -0.5 * math.pi, xtol=1e-15, rtol=_RTOL)
    barrier = max(E_J * (v(x_max) - v(x_min)), 0.0)

    sign = -1.0 if I_b < 0 else 1.0
    to_flux = CONSTANTS.phi0 / (2.0 * math.pi)
    omega_p = math.sqrt(2.0 * math.pi * I_c / (CONSTANTS.phi0 * C)) * (1.0 - s * s) ** 0.25
    return WashboardReport(
        I_b=I_b,
        I_c=I_c,
        barrier_height=barrier,
        phi_min=sign * x_min * to_flux,
        phi_max=sign * x_max * to_flux,
        plasma_frequency=omega_p,
    )


def barrier_closed_form(E_J: float, I_b: float) -> float:
    """2 E_J [sqrt(1 - s^2) - s acos(s)], the analytic washboard barrier."""
    s = abs(I_b) / critical_current(E_J)
    if s >= 1.0:
        return 0.0
    return 2.0 * E_J * (math.sqrt(1.0 - s * s) - s * math.acos(s))
