from .hamiltonian import (
    HamiltonianSpec,
    beta_l,
    build_hamiltonian,
    ej_for_beta,
    flux_qubit_spec,
    lc_spec,
    reduce_flux_bias,
)
from .netlist import CircuitNetlist, Topology, parse_netlist
from .spectrum import (
    FluxSpectrum,
    GridConfig,
    double_well_report,
    flux_matrix_element,
    solve_flux_spectrum,
    spectrum_table,
)
from .washboard import WashboardReport, critical_current, josephson_energy, washboard_analysis

__all__ = [
    "CircuitNetlist",
    "FluxSpectrum",
    "GridConfig",
    "HamiltonianSpec",
    "Topology",
    "WashboardReport",
    "beta_l",
    "build_hamiltonian",
    "critical_current",
    "double_well_report",
    "ej_for_beta",
    "flux_matrix_element",
    "flux_qubit_spec",
    "josephson_energy",
    "lc_spec",
    "parse_netlist",
    "reduce_flux_bias",
    "solve_flux_spectrum",
    "spectrum_table",
    "washboard_analysis",
]
