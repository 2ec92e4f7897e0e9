from pathlib import Path
import sys

import pytest

sys.path.append(str(Path(__file__).resolve().parents[1]))

from qatem.circuits.hamiltonian import (
    Bilinear,
    HamiltonianSpec,
    Josephson,
    Kinetic,
    Linear,
    Quadratic,
    beta_l,
    build_hamiltonian,
    ej_for_beta,
    flux_qubit_spec,
    reduce_flux_bias,
)
from qatem.circuits.netlist import Topology, parse_netlist
from qatem.errors import TopologyError, ValidationError
from qatem.physcore import CONSTANTS

ROOT = Path(__file__).resolve().parents[1]

RF_SQUID = "L l1 1 0 1e-9\nJJ j1 1 0 1e-22 1e-14\n"


def test_lc_terms() -> None:
    spec = build_hamiltonian(parse_netlist("C c1 1 0 1e-13\nL l1 1 0 1e-9"))
    assert spec.variables == ("phi_l1",)
    assert spec.terms == (Kinetic("phi_l1", 1e-13), Quadratic("phi_l1", 1e-9))
    assert "C dphi/dt" in spec.conjugates["phi_l1"]


def test_rf_squid_terms_include_cosine() -> None:
    spec = build_hamiltonian(parse_netlist(RF_SQUID))
    assert spec.terms_of(Kinetic) == [Kinetic("phi_l1", 1e-14)]
    assert spec.terms_of(Josephson) == [Josephson("phi_l1", 1e-22, 0.0)]
    assert "-E_J cos(2pi phi_l1/phi0)" in spec.describe()


def test_capacitor_and_junction_capacitances_add() -> None:
    spec = build_hamiltonian(parse_netlist(RF_SQUID + "C c1 1 0 1e-14\n"))
    (kin,) = spec.terms_of(Kinetic)
    assert kin.C == pytest.approx(2e-14)


def test_coupled_pair_has_bilinear_term() -> None:
    text = "L lr 1 0 1nH\nC cr 1 0 1pF\nL ls 2 0 1nH\nJJ js 2 0 3e-22 2fF\nK k1 lr ls 10nH\n"
    spec = build_hamiltonian(parse_netlist(text))
    assert spec.topology == Topology.COUPLED_PAIR
    assert spec.variables == ("phi_lr", "phi_ls")
    assert spec.terms_of(Bilinear) == [Bilinear("phi_lr", "phi_ls", 1e-8)]


def test_build_is_deterministic() -> None:
    text = (ROOT / "circuits" / "flux_qubit.net").read_text(encoding="utf-8")
    assert build_hamiltonian(parse_netlist(text)) == build_hamiltonian(parse_netlist(text))


def test_bias_loop_flux_reaches_primary_variable() -> None:
    spec = build_hamiltonian(parse_netlist((ROOT / "circuits" / "flux_qubit.net").read_text(encoding="utf-8")))
    (bias,) = spec.biases
    assert bias.var == "phi_L1"
    assert bias.via == "K1"
    assert not spec.terms_of(Bilinear)


def test_half_flux_reduction_flips_cosine() -> None:
    spec = build_hamiltonian(parse_netlist(RF_SQUID + "FB fb1 l1 0.5phi0\n"))
    reduced = reduce_flux_bias(spec, exact_half_flux=True)
    (jj,) = reduced.terms_of(Josephson)
    assert jj.offset == pytest.approx(CONSTANTS.phi0 / 2, rel=1e-12)
    assert "+E_J cos" in reduced.describe()
    assert reduced.biases == ()


def test_zero_bias_leaves_terms_unchanged() -> None:
    spec = build_hamiltonian(parse_netlist(RF_SQUID + "FB fb1 l1 0\n"))
    reduced = reduce_flux_bias(spec)
    assert reduced.terms == build_hamiltonian(parse_netlist(RF_SQUID)).terms


def test_l_tilde_replaces_loop_inductance() -> None:
    spec = build_hamiltonian(parse_netlist(RF_SQUID + "FB fb1 l1 0.5phi0\n"))
    reduced = reduce_flux_bias(spec, L_tilde=0.9e-9)
    assert reduced.terms_of(Quadratic) == [Quadratic("phi_l1", 0.9e-9)]


def test_current_source_limit_gives_linear_term() -> None:
    flux = 3 * CONSTANTS.phi0
    spec = build_hamiltonian(parse_netlist(RF_SQUID + f"FB fb1 l1 {flux!r}\n"))
    reduced = reduce_flux_bias(spec, current_source_limit=True)
    assert not reduced.terms_of(Quadratic)
    (lin,) = reduced.terms_of(Linear)
    assert lin.coefficient == pytest.approx(flux / 1e-9, rel=1e-12)
    (jj,) = reduced.terms_of(Josephson)
    assert jj.offset == 0.0


def test_exact_half_flux_check() -> None:
    spec = build_hamiltonian(parse_netlist(RF_SQUID + "FB fb1 l1 0.3phi0\n"))
    with pytest.raises(ValidationError, match="half-flux"):
        reduce_flux_bias(spec, exact_half_flux=True)


def test_reduction_needs_one_variable() -> None:
    text = "L lr 1 0 1nH\nC cr 1 0 1pF\nL ls 2 0 1nH\nJJ js 2 0 3e-22 2fF\nK k1 lr ls 10nH\n"
    with pytest.raises(TopologyError):
        reduce_flux_bias(build_hamiltonian(parse_netlist(text)))


def test_current_bias_netlist_keeps_loop_inductor() -> None:
    spec = build_hamiltonian(parse_netlist(RF_SQUID + "IB ib1 l1 2uA\n"))
    assert spec.terms_of(Quadratic) == [Quadratic("phi_l1", 1e-9)]
    (lin,) = spec.terms_of(Linear)
    assert lin.var == "phi_l1"
    assert lin.coefficient == pytest.approx(2e-6)


def test_current_source_limit_on_bias_current_netlist() -> None:
    spec = build_hamiltonian(parse_netlist(RF_SQUID + "IB ib1 l1 2uA\n"))
    reduced = reduce_flux_bias(spec, current_source_limit=True)
    assert not reduced.terms_of(Quadratic)
    (lin,) = reduced.terms_of(Linear)
    assert lin.coefficient == pytest.approx(2e-6)
    assert len(reduced.terms_of(Josephson)) == 1


def test_spec_requires_one_kinetic_term_per_variable() -> None:
    with pytest.raises(ValidationError):
        HamiltonianSpec(variables=("x",), terms=(Quadratic("x", 1e-9),))
    with pytest.raises(ValidationError):
        HamiltonianSpec(variables=("x",), terms=(Kinetic("x", 1e-13),))


def test_beta_round_trip_and_flux_qubit_helper() -> None:
    L = 1e-9
    E_J = ej_for_beta(L, 3.0)
    assert E_J == pytest.approx(3.2494e-22, rel=1e-4)
    assert beta_l(L, E_J) == pytest.approx(3.0, rel=1e-14)
    spec = flux_qubit_spec(L, 2e-15, E_J)
    assert spec.topology == Topology.FLUX_QUBIT
    assert spec.terms_of(Josephson)[0].offset == pytest.approx(CONSTANTS.phi0 / 2)
