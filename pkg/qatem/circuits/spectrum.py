from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from ..errors import GridError, PotentialShapeError, TopologyError
from ..physcore import CONSTANTS
from .hamiltonian import Bilinear, HamiltonianSpec, Josephson, Kinetic, Linear, Quadratic

LOG = logging.getLogger(__name__)

AUTO_GRID_POINTS = 2001
LADDER_DEPTH = 4
CONVERGENCE_TOLERANCE = 1e-8
WINDOW_SIGMAS = 8.0
BOUNDARY_POINTS = 5
BOUNDARY_MASS_LIMIT = 1e-6
SCAN_POINTS = 20001
SYMMETRY_RTOL = 1e-9
DIAGONAL_TOLERANCE = 1e-6

SPECTRUM_COLUMNS = ["level", "energy_J", "energy_GHz", "parity"]


@dataclass(frozen=True)
class GridConfig:
    phi_min: float
    phi_max: float
    n_points: int = AUTO_GRID_POINTS
    boundary: str = "hard-wall"

    def __post_init__(self) -> None:
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise GridError(f"n_points must be odd and >= 3, got {self.n_points}")
        if not self.phi_max > self.phi_min:
            raise GridError("phi_max must exceed phi_min")
        if self.boundary != "hard-wall":
            raise GridError(f"unsupported boundary '{self.boundary}'")

    @property
    def step(self) -> float:
        return (self.phi_max - self.phi_min) / (self.n_points - 1)

    @property
    def center(self) -> float:
        return 0.5 * (self.phi_min + self.phi_max)

    def points(self) -> np.ndarray:
        return np.linspace(self.phi_min, self.phi_max, self.n_points)

    def refined(self) -> "GridConfig":
        """Same window with the step halved (the center stays a grid point)."""
        return replace(self, n_points=2 * self.n_points - 1)


@dataclass(frozen=True)
class Potential1D:
    """V(phi) = phi^2/2L - sum E_J cos(2 pi (phi + offset)/phi0) + I_b phi."""

    var: str
    C: float
    L: Optional[float]
    junctions: Tuple[Tuple[float, float], ...]
    linear: float

    def __call__(self, phi: np.ndarray | float) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        k = 2.0 * math.pi / CONSTANTS.phi0
        v = self.linear * phi
        if self.L is not None:
            v = v + phi**2 / (2.0 * self.L)
        for E_J, offset in self.junctions:
            v = v - E_J * np.cos(k * (phi + offset))
        return v

    def derivative(self, phi: np.ndarray | float) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        k = 2.0 * math.pi / CONSTANTS.phi0
        d = np.full_like(phi, self.linear)
        if self.L is not None:
            d = d + phi / self.L
        for E_J, offset in self.junctions:
            d = d + E_J * k * np.sin(k * (phi + offset))
        return d

    def curvature(self, phi: np.ndarray | float) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        k = 2.0 * math.pi / CONSTANTS.phi0
        c = np.zeros_like(phi)
        if self.L is not None:
            c = c + 1.0 / self.L
        for E_J, offset in self.junctions:
            c = c + E_J * k * k * np.cos(k * (phi + offset))
        return c

    @property
    def critical_current(self) -> float:
        return sum(2.0 * math.pi * E_J / CONSTANTS.phi0 for E_J, _ in self.junctions)

    @property
    def center(self) -> float:
        """Minimum of the quadratic-plus-linear part (the symmetry point)."""
        return -self.linear * self.L if self.L is not None else 0.0

    @property
    def flux_spread(self) -> float:
        """sqrt(2) (hbar^2 L / 4C)^(1/4), the zero-point flux scale of the quadratic part."""
        if self.L is None:
            raise GridError("potential has no confining quadratic term")
        return math.sqrt(2.0) * (CONSTANTS.hbar**2 * self.L / (4.0 * self.C)) ** 0.25


def single_variable(spec: HamiltonianSpec) -> Potential1D:
    if len(spec.variables) != 1:
        raise TopologyError(f"expected exactly one dynamical variable, got {len(spec.variables)}")
    if spec.terms_of(Bilinear):
        raise TopologyError("bilinear coupling in a one-variable problem")
    var = spec.variables[0]
    kinetic = spec.terms_of(Kinetic)[0]
    quadratic = spec.terms_of(Quadratic)
    if len(quadratic) > 1:
        raise TopologyError("more than one quadratic term")
    return Potential1D(
        var=var,
        C=kinetic.C,
        L=quadratic[0].L_eff if quadratic else None,
        junctions=tuple((t.E_J, t.offset) for t in spec.terms_of(Josephson)),
        linear=sum(t.coefficient for t in spec.terms_of(Linear)),
    )


def potential(spec: HamiltonianSpec, phi: np.ndarray | float) -> np.ndarray:
    return single_variable(spec)(phi)


def _stationary_points(pot: Potential1D, lo: float, hi: float, kind: str, n: int = SCAN_POINTS) -> List[float]:
    """Locate minima ('min') or maxima ('max') of V by bracketing V' sign changes."""
    x = np.linspace(lo, hi, n)
    d = pot.derivative(x)
    if kind == "min":
        idx = np.nonzero((d[:-1] < 0) & (d[1:] >= 0))[0]
    else:
        idx = np.nonzero((d[:-1] > 0) & (d[1:] <= 0))[0]
    roots = []
    for i in idx:
        a, b = x[i], x[i + 1]
        if d[i + 1] == 0:
            roots.append(float(b))
            continue
        roots.append(float(brentq(lambda p: float(pot.derivative(p)), a, b, xtol=1e-30, rtol=4 * np.finfo(float).eps)))
    return roots


def find_minima(pot: Potential1D, lo: float, hi: float) -> List[float]:
    return _stationary_points(pot, lo, hi, "min")


def find_maxima(pot: Potential1D, lo: float, hi: float) -> List[float]:
    return _stationary_points(pot, lo, hi, "max")


def auto_grid(pot: Potential1D, n_points: int = AUTO_GRID_POINTS) -> GridConfig:
    """Window [min - 8 sigma, max + 8 sigma] around the wells nearest the symmetry point."""
    sigma = pot.flux_spread
    c = pot.center
    reach = (pot.L or 0.0) * pot.critical_current + CONSTANTS.phi0 + WINDOW_SIGMAS * sigma
    minima = find_minima(pot, c - reach, c + reach)
    if not minima:
        raise PotentialShapeError("potential has no local minimum")
    central = [m for m in minima if abs(m - c) <= CONSTANTS.phi0]
    if not central:
        central = [min(minima, key=lambda m: float(pot(m)))]
    half_width = max(abs(m - c) for m in central) + WINDOW_SIGMAS * sigma
    grid = GridConfig(c - half_width, c + half_width, n_points)
    LOG.debug("Auto grid: %d minima in window, half-width %.4g phi0", len(central), half_width / CONSTANTS.phi0)
    return grid


@dataclass(frozen=True, eq=False)
class GridSolution:
    grid: GridConfig
    energies: np.ndarray
    wavefunctions: np.ndarray


def _fix_sign(psi: np.ndarray) -> np.ndarray:
    """Make psi positive at its leftmost antinode."""
    a = np.abs(psi)
    floor = 1e-2 * a.max()
    peaks = np.nonzero((a[1:-1] >= a[:-2]) & (a[1:-1] >= a[2:]) & (a[1:-1] > floor))[0]
    i = peaks[0] + 1 if peaks.size else int(np.argmax(a))
    return -psi if psi[i] < 0 else psi


def solve_on_grid(pot: Potential1D, grid: GridConfig, n_levels: int) -> GridSolution:
    """Lowest eigenpairs of the central-difference Hamiltonian with hard walls."""
    if n_levels > grid.n_points:
        raise GridError(f"{n_levels} levels requested on a {grid.n_points}-point grid")
    phi = grid.points()
    h = grid.step
    scale = CONSTANTS.hbar**2 / (2.0 * pot.C * h * h)
    diagonal = 2.0 + pot(phi) / scale
    off_diagonal = -np.ones(grid.n_points - 1)
    w, v = eigh_tridiagonal(
        diagonal,
        off_diagonal,
        select="i",
        select_range=(0, n_levels - 1),
        check_finite=False,
    )
    psi = v.T / math.sqrt(h)
    psi = np.array([_fix_sign(row) for row in psi])

    edge = np.sum(psi[:, :BOUNDARY_POINTS] ** 2, axis=1) * h + np.sum(psi[:, -BOUNDARY_POINTS:] ** 2, axis=1) * h
    if np.any(edge > BOUNDARY_MASS_LIMIT):
        worst = int(np.argmax(edge))
        raise GridError(
            f"grid too small: level {worst} has probability {edge[worst]:.2e} within "
            f"{BOUNDARY_POINTS} points of the boundary"
        )
    return GridSolution(grid=grid, energies=w * scale, wavefunctions=psi)


def romberg(values: Sequence[np.ndarray]) -> List[List[np.ndarray]]:
    """Richardson table for O(h^2) estimates on grids with halving steps."""
    table = [list(values)]
    order = 2
    while len(table[-1]) > 1:
        prev = table[-1]
        factor = 2**order
        table.append([(factor * prev[i + 1] - prev[i]) / (factor - 1) for i in range(len(prev) - 1)])
        order += 2
    return table


@dataclass(frozen=True, eq=False)
class FluxSpectrum:
    energies: np.ndarray
    wavefunctions: np.ndarray
    parities: Tuple[str, ...]
    grid: GridConfig
    convergence: float
    symmetric: bool
    ladder: Tuple[GridSolution, ...] = ()

    @property
    def n_levels(self) -> int:
        return int(self.energies.size)

    @property
    def phi(self) -> np.ndarray:
        return self.grid.points()


def _parities(pot: Potential1D, solution: GridSolution) -> Tuple[bool, Tuple[str, ...]]:
    phi = solution.grid.points()
    v = pot(phi)
    atol = 1e-12 * float(np.max(np.abs(v)))
    symmetric = bool(np.allclose(v, v[::-1], rtol=SYMMETRY_RTOL, atol=atol))
    if not symmetric:
        return False, tuple("none" for _ in solution.energies)
    h = solution.grid.step
    labels = []
    for psi in solution.wavefunctions:
        overlap = float(np.sum(psi * psi[::-1]) * h)
        labels.append("even" if overlap > 0.5 else "odd" if overlap < -0.5 else "none")
    return True, tuple(labels)


def _relative_change(new: np.ndarray, old: np.ndarray, scale: float) -> float:
    denom = np.maximum(np.abs(new), scale)
    return float(np.max(np.abs(new - old) / denom))


def solve_flux_spectrum(
    spec: HamiltonianSpec,
    grid: Union[GridConfig, str, None] = "auto",
    n_levels: int = 4,
    *,
    base_points: int = AUTO_GRID_POINTS,
) -> FluxSpectrum:
    """Lowest ``n_levels`` levels of -hbar^2/2C d^2/dphi^2 + V(phi).

    In auto mode the window is chosen from the potential and the eigenvalues
    are Romberg-extrapolated over a ladder of doubled grids; the convergence
    figure is the change of the extrapolant when the base grid is doubled.
    With an explicit grid the values come from that grid and the convergence
    figure is the change on one doubling.
    """
    if n_levels < 1:
        raise GridError("n_levels must be >= 1")
    pot = single_variable(spec)
    if pot.L is None:
        raise GridError("potential is not confining (no quadratic flux term)")
    scale = CONSTANTS.hbar / math.sqrt(pot.L * pot.C)

    if grid is None or grid == "auto":
        base = auto_grid(pot, base_points)
        grids = [base]
        for _ in range(LADDER_DEPTH - 1):
            grids.append(grids[-1].refined())
        ladder = tuple(solve_on_grid(pot, g, n_levels) for g in grids)
        table = romberg([s.energies for s in ladder])
        top = table[-2]
        energies = top[-1]
        convergence = _relative_change(top[-1], top[-2], scale)
        reported = ladder[0]
    elif isinstance(grid, GridConfig):
        reported = solve_on_grid(pot, grid, n_levels)
        finer = solve_on_grid(pot, grid.refined(), n_levels)
        ladder = (reported,)
        energies = reported.energies
        convergence = _relative_change(finer.energies, reported.energies, scale)
    else:
        raise GridError(f"grid must be 'auto' or a GridConfig, got {grid!r}")

    if convergence > CONVERGENCE_TOLERANCE:
        LOG.warning("Eigenvalues changed by %.2e (relative) on grid doubling", convergence)
    if n_levels > 1 and np.any(np.diff(energies) <= 0):
        raise GridError("eigenvalues are not strictly ascending; refine the grid")

    symmetric, parities = _parities(pot, reported)
    LOG.debug(
        "Solved %d levels on %d points (convergence %.2e, symmetric=%s)",
        n_levels,
        reported.grid.n_points,
        convergence,
        symmetric,
    )
    return FluxSpectrum(
        energies=np.asarray(energies),
        wavefunctions=reported.wavefunctions,
        parities=parities,
        grid=reported.grid,
        convergence=convergence,
        symmetric=symmetric,
        ladder=ladder,
    )


@dataclass(frozen=True)
class DoubleWellReport:
    phi_A: float
    phi_B: float
    delta_phi: float
    splitting: Optional[float]
    barrier_height: float


def double_well_report(spec: HamiltonianSpec, spectrum: Optional[FluxSpectrum]) -> DoubleWellReport:
    """Locate the two wells nearest the symmetry point; the splitting needs a solved spectrum."""
    pot = single_variable(spec)
    c = pot.center
    minima = sorted(find_minima(pot, c - CONSTANTS.phi0, c + CONSTANTS.phi0))
    if len(minima) < 2:
        raise PotentialShapeError("monostable potential: a single minimum within one flux quantum")
    if len(minima) > 2:
        raise PotentialShapeError(f"{len(minima)} minima within one flux quantum of the center")
    if spectrum is not None and spectrum.n_levels < 2:
        raise PotentialShapeError("the splitting needs at least two solved levels")
    phi_A, phi_B = minima
    maxima = find_maxima(pot, phi_A, phi_B)
    top = max((float(pot(m)) for m in maxima), default=float(pot(0.5 * (phi_A + phi_B))))
    barrier = top - max(float(pot(phi_A)), float(pot(phi_B)))
    return DoubleWellReport(
        phi_A=phi_A,
        phi_B=phi_B,
        delta_phi=phi_B - phi_A,
        splitting=float(spectrum.energies[1] - spectrum.energies[0]) if spectrum is not None else None,
        barrier_height=barrier,
    )


@dataclass(frozen=True)
class FluxMatrixElement:
    phi01: float
    phi00: float
    phi11: float


def _definite_parity(psi: np.ndarray) -> np.ndarray:
    """Drop the minority parity component left by near-degenerate eigenvectors."""
    even = 0.5 * (psi + psi[::-1])
    odd = psi - even
    part = even if np.dot(even, even) >= np.dot(odd, odd) else odd
    return part * (np.linalg.norm(psi) / np.linalg.norm(part))


def _element(solution: GridSolution, center: float, i: int, j: int, symmetric: bool = False) -> float:
    phi = solution.grid.points() - center
    psi_i, psi_j = solution.wavefunctions[i], solution.wavefunctions[j]
    if symmetric:
        psi_i, psi_j = _definite_parity(psi_i), _definite_parity(psi_j)
    return float(np.sum(psi_i * phi * psi_j) * solution.grid.step)


def flux_matrix_element(spectrum: FluxSpectrum) -> FluxMatrixElement:
    """<0|phi|1> measured from the symmetry center, sign-normalized positive.

    On a symmetric potential each state is projected onto its dominant parity
    first, so a tiny tunnel splitting cannot leak into the diagonal elements.
    """
    if spectrum.n_levels < 2:
        raise PotentialShapeError("flux matrix element needs at least two levels")
    center = spectrum.grid.center
    values = [abs(_element(s, center, 0, 1, spectrum.symmetric)) for s in spectrum.ladder]
    if len(values) >= 3:
        table = romberg(values)
        phi01 = float(table[-2][-1])
    else:
        phi01 = values[-1]
    finest = spectrum.ladder[-1]
    phi00 = _element(finest, center, 0, 0, spectrum.symmetric)
    phi11 = _element(finest, center, 1, 1, spectrum.symmetric)
    if max(abs(phi00), abs(phi11)) > DIAGONAL_TOLERANCE * phi01:
        raise PotentialShapeError(
            f"asymmetric potential: diagonal flux elements {phi00:.3e}, {phi11:.3e} Wb "
            f"against <0|phi|1> = {phi01:.3e} Wb"
        )
    return FluxMatrixElement(phi01=phi01, phi00=phi00, phi11=phi11)


def spectrum_table(spectrum: FluxSpectrum) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "level": np.arange(spectrum.n_levels),
            "energy_J": spectrum.energies,
            "energy_GHz": spectrum.energies / CONSTANTS.h / 1e9,
            "parity": list(spectrum.parities),
        },
        columns=SPECTRUM_COLUMNS,
    )
