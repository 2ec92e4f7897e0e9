from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy import constants as sc

from .errors import UnitError

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhysConstants:
    """SI constants shared by every module.

    h, e, k_B and c are exact SI defining constants. The measured values
    (alpha, eps0, mu0, m_e) are pinned to CODATA 2018 so results do not drift
    with the installed scipy release.
    """

    h: float
    e: float
    k_B: float
    c: float
    alpha: float
    eps0: float
    mu0: float
    m_e: float
    sigma_SB: float
    b_wien: float
    Delta_Al: float
    version: str = "CODATA-2018"
    hbar: float = field(init=False)
    phi0: float = field(init=False)
    R_K: float = field(init=False)
    Z0: float = field(init=False)
    m_e_c2: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hbar", self.h / (2.0 * math.pi))
        object.__setattr__(self, "phi0", self.h / (2.0 * self.e))
        object.__setattr__(self, "R_K", self.h / self.e**2)
        object.__setattr__(self, "Z0", self.mu0 * self.c)
        object.__setattr__(self, "m_e_c2", self.m_e * self.c**2)

    @classmethod
    def codata2018(cls) -> "PhysConstants":
        return cls(
            h=sc.h,
            e=sc.e,
            k_B=sc.k,
            c=sc.c,
            alpha=7.2973525693e-3,
            eps0=8.8541878128e-12,
            mu0=1.25663706212e-6,
            m_e=9.1093837015e-31,
            sigma_SB=5.670374419e-8,
            b_wien=2.897771955e-3,
            Delta_Al=170e-6 * sc.e,
        )

    def as_dict(self) -> Dict[str, float | str]:
        return {
            "version": self.version,
            "phi0": self.phi0,
            "R_K": self.R_K,
            "Z0": self.Z0,
            "alpha": self.alpha,
            "hbar": self.hbar,
            "h": self.h,
            "e": self.e,
            "eps0": self.eps0,
            "k_B": self.k_B,
            "sigma_SB": self.sigma_SB,
            "m_e_c2": self.m_e_c2,
            "Delta_Al": self.Delta_Al,
            "c": self.c,
            "m_e": self.m_e,
            "b_wien": self.b_wien,
        }


def check_constants(const: PhysConstants) -> None:
    """Raise AssertionError when the constant identities do not hold."""

    def rel(a: float, b: float) -> float:
        return abs(a - b) / abs(b)

    assert rel(const.phi0, const.h / (2 * const.e)) < 1e-12, "phi0 != h/2e"
    assert rel(const.R_K, const.h / const.e**2) < 1e-12, "R_K != h/e^2"
    assert rel(2 * const.R_K / const.Z0, 1 / const.alpha) < 1e-3, "2 R_K / Z0 != 1/alpha"


CONSTANTS = PhysConstants.codata2018()
check_constants(CONSTANTS)


# ---------------------------------------------------------------------------
# Units
# ---------------------------------------------------------------------------

_PREFIXES: Dict[str, float] = {
    "f": 1e-15,
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "μ": 1e-6,
    "µ": 1e-6,
    "m": 1e-3,
    "k": 1e3,
    "M": 1e6,
    "G": 1e9,
}

# dimension -> base tag -> SI factor; prefixed tags are generated for PREFIXABLE
_BASE_UNITS: Dict[str, Dict[str, float]] = {
    "energy": {
        "J": 1.0,
        "eV": CONSTANTS.e,
        "Hz": CONSTANTS.h,
        "K": CONSTANTS.k_B,
    },
    "temperature": {"K": 1.0},
    "flux": {"Wb": 1.0, "phi0": CONSTANTS.phi0, "φ₀": CONSTANTS.phi0, "phi_0": CONSTANTS.phi0},
    "length": {"m": 1.0, "Å": 1e-10, "angstrom": 1e-10},
    "area": {"m2": 1.0, "m^2": 1.0},
    "capacitance": {"F": 1.0},
    "inductance": {"H": 1.0},
    "resistance": {"Ω": 1.0, "ohm": 1.0, "Ohm": 1.0},
    "current": {"A": 1.0},
    "charge": {"C": 1.0, "e": CONSTANTS.e},
    "angle": {"rad": 1.0},
    "time": {"s": 1.0},
    "frequency": {"Hz": 1.0, "rad/s": 1.0 / (2.0 * math.pi)},
    "dimensionless": {"": 1.0},
}

PREFIXABLE = {"J", "eV", "Hz", "K", "Wb", "m", "F", "H", "Ω", "ohm", "A", "C", "rad", "s"}


def _build_unit_table() -> Dict[str, Dict[str, float]]:
    table: Dict[str, Dict[str, float]] = {}
    for dim, units in _BASE_UNITS.items():
        expanded = dict(units)
        for tag, factor in units.items():
            if tag not in PREFIXABLE:
                continue
            for prefix, scale in _PREFIXES.items():
                expanded.setdefault(prefix + tag, scale * factor)
        table[dim] = expanded
    # area accepts squared prefixed lengths, e.g. um2
    for prefix, scale in _PREFIXES.items():
        table["area"].setdefault(f"{prefix}m2", scale * scale)
    return table


UNITS = _build_unit_table()

# tags spelled out for unit_convert; "K" is an energy there (E / k_B)
CONVERT_DIMENSIONS = ("energy", "flux", "length", "capacitance", "inductance", "resistance", "current", "angle")


def _lookup(tag: str, dimensions: Tuple[str, ...]) -> List[Tuple[str, float]]:
    return [(dim, UNITS[dim][tag]) for dim in dimensions if tag in UNITS[dim]]


def unit_convert(value: float, unit: str, target: str) -> float:
    """Convert ``value`` expressed in ``unit`` into ``target``.

    Energies may be expressed as J, eV (with prefixes), frequency E/h (Hz with
    prefixes) or temperature E/k_B (K with prefixes).
    """
    src = _lookup(unit, CONVERT_DIMENSIONS)
    dst = _lookup(target, CONVERT_DIMENSIONS)
    if not src:
        raise UnitError(f"unknown unit tag '{unit}'")
    if not dst:
        raise UnitError(f"unknown unit tag '{target}'")
    for dim_s, f_s in src:
        for dim_d, f_d in dst:
            if dim_s == dim_d:
                return value * f_s / f_d
    raise UnitError(f"cannot convert {src[0][0]} '{unit}' into {dst[0][0]} '{target}'")


_QUANTITY_RE = re.compile(
    r"^\s*(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(?P<unit>[^\d\s+-].*?)?\s*$"
)


def parse_quantity(text: str, dimension: str, *, allow_bare: bool = True) -> float:
    """Parse ``"100eV"``, ``"1um"``, ``"0.5phi0"`` or ``"1e-13"`` into SI units."""
    if dimension not in UNITS:
        raise UnitError(f"unknown dimension '{dimension}'")
    match = _QUANTITY_RE.match(str(text))
    if match is None:
        raise UnitError(f"cannot parse quantity '{text}'")
    number = float(match.group("num"))
    unit = match.group("unit") or ""
    if not unit:
        if not allow_bare and dimension != "dimensionless":
            raise UnitError(f"'{text}' needs a unit ({dimension})")
        return number
    factor = UNITS[dimension].get(unit)
    if factor is None:
        raise UnitError(f"unit '{unit}' is not a {dimension} unit")
    return number * factor


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------

RNG_ALGORITHM = "numpy.Philox4x64-10/SeedSequence"


@dataclass(frozen=True)
class RngSpec:
    """Stream ``stream_index`` of ``master_seed``, nested under the ``parent`` stream path."""

    master_seed: int
    stream_index: int = 0
    algorithm_name: str = RNG_ALGORITHM
    parent: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise UnitError(f"seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.stream_index < 0 or any(i < 0 for i in self.parent):
            raise UnitError(f"stream index must be >= 0, got {(*self.parent, self.stream_index)}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(*self.parent, self.stream_index))
        return np.random.Generator(np.random.Philox(seq))

    def stream(self, index: int) -> "RngSpec":
        return replace(self, stream_index=index)

    def spawn(self, n: int) -> List["RngSpec"]:
        """Child streams 0..n-1 of this stream."""
        path = (*self.parent, self.stream_index)
        return [replace(self, stream_index=i, parent=path) for i in range(n)]

    def as_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "algorithm_name": self.algorithm_name,
            "master_seed": self.master_seed,
            "stream_index": self.stream_index,
        }
        if self.parent:
            payload["parent"] = list(self.parent)
        return payload
