"""
Circuit quantization: netlist -> Hamiltonian term list.

Every loop with a capacitor or junction contributes one dynamical variable
(its traversed magnetic flux). Capacitances give the kinetic part, inductors
the quadratic flux energy, mutual couplings a bilinear term and junctions a
cosine term. The conjugate charge of each variable is q = dL/d(dphi/dt) = C dphi/dt.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple, Union

from ..errors import TopologyError, ValidationError
from ..physcore import CONSTANTS
from .netlist import CircuitNetlist, Element, ElementKind, Topology

LOG = logging.getLogger(__name__)

HALF_FLUX_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Kinetic:
    var: str
    C: float

    def describe(self) -> str:
        return f"q_{self.var}^2/2C"


@dataclass(frozen=True)
class Quadratic:
    var: str
    L_eff: float

    def describe(self) -> str:
        return f"{self.var}^2/2L"


@dataclass(frozen=True)
class Bilinear:
    var_i: str
    var_j: str
    L_c: float

    def describe(self) -> str:
        return f"{self.var_i}*{self.var_j}/L_c"


@dataclass(frozen=True)
class Josephson:
    """-E_J cos(2 pi (phi + offset) / phi0)."""

    var: str
    E_J: float
    offset: float = 0.0

    def describe(self) -> str:
        if self.offset == 0.0:
            return f"-E_J cos(2pi {self.var}/phi0)"
        if math.isclose(self.offset, CONSTANTS.phi0 / 2, rel_tol=HALF_FLUX_TOLERANCE):
            return f"+E_J cos(2pi {self.var}/phi0)"
        return f"-E_J cos(2pi ({self.var} + {self.offset:.6g} Wb)/phi0)"


@dataclass(frozen=True)
class Linear:
    var: str
    coefficient: float

    def describe(self) -> str:
        return f"I_b*{self.var}"


Term = Union[Kinetic, Quadratic, Bilinear, Josephson, Linear]


@dataclass(frozen=True)
class FluxBias:
    """Flux Phi_ext threading the loop of ``var`` (directly or through ``coupling``)."""

    name: str
    var: str
    flux: float
    via: Optional[str] = None
    inductor: Optional[str] = None


@dataclass(frozen=True)
class HamiltonianSpec:
    variables: Tuple[str, ...]
    terms: Tuple[Term, ...]
    biases: Tuple[FluxBias, ...] = ()
    topology: Optional[Topology] = None
    conjugates: Dict[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        for var in self.variables:
            kinetic = [t for t in self.terms if isinstance(t, Kinetic) and t.var == var]
            if len(kinetic) != 1:
                raise ValidationError(f"variable {var} has {len(kinetic)} kinetic terms, expected 1")
            potential = [
                t
                for t in self.terms
                if not isinstance(t, Kinetic) and var in _term_vars(t)
            ]
            if not potential:
                raise ValidationError(f"variable {var} appears in no potential term")

    def terms_of(self, kind: type) -> List[Term]:
        return [t for t in self.terms if isinstance(t, kind)]

    def describe(self) -> str:
        return "H = " + " + ".join(t.describe() for t in self.terms)


def _term_vars(term: Term) -> Tuple[str, ...]:
    if isinstance(term, Bilinear):
        return (term.var_i, term.var_j)
    return (term.var,)


def build_hamiltonian(net: CircuitNetlist) -> HamiltonianSpec:
    variables: List[str] = []
    terms: List[Term] = []
    conjugates: Dict[str, str] = {}
    var_of_inductor: Dict[str, str] = {}

    for loop in net.loops:
        var_of_inductor[loop.inductor.name] = loop.variable
        if not loop.dynamic:
            continue
        var = loop.variable
        variables.append(var)
        terms.append(Kinetic(var, loop.capacitance))
        conjugates[var] = f"q_{var} = C dphi/dt, C = {loop.capacitance:.6g} F"
        terms.append(Quadratic(var, loop.inductor.params["L"]))
        if loop.junction is not None:
            terms.append(Josephson(var, loop.junction.params["E_J"]))

    biases: List[FluxBias] = []
    dynamic_vars = set(variables)
    for el in net.elements:
        if el.kind == ElementKind.MUTUAL_COUPLING:
            v1, v2 = (var_of_inductor[t] for t in el.terminals)
            if v1 in dynamic_vars and v2 in dynamic_vars:
                terms.append(Bilinear(v1, v2, el.params["L_c"]))
        elif el.kind == ElementKind.BIAS_CURRENT:
            # the loop inductor stays; reduce_flux_bias(current_source_limit=True) drops it
            terms.append(Linear(var_of_inductor[el.terminals[0]], el.params["I_b"]))
        elif el.kind == ElementKind.FLUX_BIAS:
            biases.append(_flux_bias_entry(net, el, var_of_inductor, dynamic_vars))

    spec = HamiltonianSpec(
        variables=tuple(variables),
        terms=tuple(terms),
        biases=tuple(biases),
        topology=net.topology,
        conjugates=conjugates,
    )
    LOG.debug("Built %s for topology %s", spec.describe(), net.topology.value)
    return spec


def _flux_bias_entry(
    net: CircuitNetlist,
    el: Element,
    var_of_inductor: Dict[str, str],
    dynamic_vars: set,
) -> FluxBias:
    target = el.terminals[0]
    var = var_of_inductor[target]
    if var in dynamic_vars:
        return FluxBias(el.name, var, el.params["Phi_ext"], via=None, inductor=target)
    for k in net.of_kind(ElementKind.MUTUAL_COUPLING):
        if target in k.terminals:
            other = next(t for t in k.terminals if t != target)
            return FluxBias(el.name, var_of_inductor[other], el.params["Phi_ext"], via=k.name, inductor=other)
    raise TopologyError("flux bias does not reach a dynamical loop", el.name, el.line)


def reduce_flux_bias(
    spec: HamiltonianSpec,
    bias: Optional[Union[FluxBias, str]] = None,
    *,
    L_tilde: Optional[float] = None,
    current_source_limit: bool = False,
    exact_half_flux: bool = False,
) -> HamiltonianSpec:
    """Fold a flux bias into the single-variable potential.

    The loop variable is shifted by the bias so that the junction term becomes
    -E_J cos(2 pi (phi + Phi)/phi0); at Phi = phi0/2 this is +E_J cos(2 pi phi/phi0).
    ``L_tilde`` replaces the loop inductance (weak-coupling default: L itself).
    With ``current_source_limit`` the loop inductor is treated as a large
    superconducting ring holding Phi: the quadratic term is dropped and a linear
    term I_b phi with I_b = Phi/L remains. A loop driven by a bias-current
    source keeps its own linear term.
    """
    if len(spec.variables) != 1:
        raise TopologyError(f"flux-bias reduction needs one dynamical variable, got {len(spec.variables)}")
    if isinstance(bias, str):
        matches = [b for b in spec.biases if b.name == bias]
        if not matches:
            raise ValidationError(f"no flux bias named '{bias}'")
        bias = matches[0]
    elif bias is None:
        if len(spec.biases) > 1:
            raise ValidationError("several flux biases present; name the one to reduce")
        bias = spec.biases[0] if spec.biases else None

    var = spec.variables[0]
    flux = bias.flux if bias is not None else 0.0
    if exact_half_flux and not math.isclose(flux, CONSTANTS.phi0 / 2, rel_tol=HALF_FLUX_TOLERANCE):
        raise ValidationError(
            f"flux bias {flux:.6g} Wb is not at the half-flux point {CONSTANTS.phi0 / 2:.6g} Wb"
        )

    quadratic = [t for t in spec.terms if isinstance(t, Quadratic)]
    new_terms: List[Term] = []
    for term in spec.terms:
        if isinstance(term, Quadratic):
            if current_source_limit:
                continue
            new_terms.append(replace(term, L_eff=L_tilde) if L_tilde is not None else term)
        elif isinstance(term, Josephson) and not current_source_limit:
            new_terms.append(replace(term, offset=term.offset + flux))
        else:
            new_terms.append(term)

    if current_source_limit:
        if not quadratic:
            raise TopologyError("current-source limit needs a loop inductor")
        # a bias-current source already supplies the linear term
        if bias is not None or not spec.terms_of(Linear):
            L = L_tilde if L_tilde is not None else quadratic[0].L_eff
            new_terms.append(Linear(var, flux / L))

    remaining = tuple(b for b in spec.biases if b != bias)
    reduced = replace(spec, terms=tuple(new_terms), biases=remaining)
    LOG.debug("Reduced flux bias %.6g Wb -> %s", flux, reduced.describe())
    return reduced


def beta_l(L: float, E_J: float) -> float:
    """Bistability parameter L * E_J * (2 pi / phi0)^2; a double well needs > 1."""
    return L * E_J * (2.0 * math.pi / CONSTANTS.phi0) ** 2


def ej_for_beta(L: float, beta: float) -> float:
    return beta / (L * (2.0 * math.pi / CONSTANTS.phi0) ** 2)


def flux_qubit_spec(L: float, C: float, E_J: float, *, flux: float = CONSTANTS.phi0 / 2, L_tilde: Optional[float] = None) -> HamiltonianSpec:
    """Single-loop rf-SQUID with a flux bias already folded in."""
    var = "phi"
    spec = HamiltonianSpec(
        variables=(var,),
        terms=(Kinetic(var, C), Quadratic(var, L), Josephson(var, E_J)),
        biases=(FluxBias("fb", var, flux),),
        topology=Topology.FLUX_QUBIT,
    )
    return reduce_flux_bias(spec, L_tilde=L_tilde)


def lc_spec(L: float, C: float) -> HamiltonianSpec:
    var = "phi"
    return HamiltonianSpec(variables=(var,), terms=(Kinetic(var, C), Quadratic(var, L)), topology=Topology.LC)
