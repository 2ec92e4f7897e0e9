"""
Line-oriented circuit netlist parser.

Grammar (one element per line, '#' starts a comment):

    C  name n1 n2 farads
    L  name n1 n2 henries
    JJ name n1 n2 EJ_joules CJ_farads
    K  name l1 l2 Lc_henries
    IB name lname amperes
    FB name lname webers

Numbers accept scientific notation and unit suffixes (``100fF``, ``1nH``,
``50ueV``, ``0.5phi0``); bare numbers are SI.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

from ..errors import NetlistError, TopologyError, UnitError
from ..physcore import parse_quantity

LOG = logging.getLogger(__name__)


class ElementKind(str, Enum):
    CAPACITOR = "capacitor"
    INDUCTOR = "inductor"
    JOSEPHSON_JUNCTION = "josephson_junction"
    MUTUAL_COUPLING = "mutual_coupling"
    BIAS_CURRENT = "bias_current"
    FLUX_BIAS = "flux_bias"


class Topology(str, Enum):
    LC = "lc"
    RF_SQUID = "rf_squid"
    FLUX_QUBIT = "flux_qubit"
    CURRENT_BIASED_JJ = "current_biased_jj"
    COUPLED_PAIR = "coupled_pair"


# keyword -> (kind, number of terminals, [(parameter, dimension, must be positive)])
_GRAMMAR: Dict[str, Tuple[ElementKind, int, List[Tuple[str, str, bool]]]] = {
    "C": (ElementKind.CAPACITOR, 2, [("C", "capacitance", True)]),
    "L": (ElementKind.INDUCTOR, 2, [("L", "inductance", True)]),
    "JJ": (ElementKind.JOSEPHSON_JUNCTION, 2, [("E_J", "energy", True), ("C_J", "capacitance", True)]),
    "K": (ElementKind.MUTUAL_COUPLING, 2, [("L_c", "inductance", True)]),
    "IB": (ElementKind.BIAS_CURRENT, 1, [("I_b", "current", False)]),
    "FB": (ElementKind.FLUX_BIAS, 1, [("Phi_ext", "flux", False)]),
}

_PARAM_LABELS = {
    "C": "capacitance",
    "L": "inductance",
    "E_J": "Josephson energy",
    "C_J": "junction capacitance",
    "L_c": "coupling inductance",
}

BRANCH_KINDS = (ElementKind.CAPACITOR, ElementKind.INDUCTOR, ElementKind.JOSEPHSON_JUNCTION)


@dataclass(frozen=True)
class Element:
    kind: ElementKind
    name: str
    terminals: Tuple[str, ...]
    params: Dict[str, float] = field(default_factory=dict, compare=True, hash=False)
    line: int = 0

    @property
    def node_pair(self) -> frozenset:
        return frozenset(self.terminals)


@dataclass(frozen=True)
class Loop:
    """Elements sharing one node pair; the dynamical variable is the loop's TMF."""

    nodes: Tuple[str, str]
    inductor: Element
    junction: Optional[Element] = None
    capacitor: Optional[Element] = None

    @property
    def dynamic(self) -> bool:
        return self.junction is not None or self.capacitor is not None

    @property
    def capacitance(self) -> float:
        total = 0.0
        if self.capacitor is not None:
            total += self.capacitor.params["C"]
        if self.junction is not None:
            total += self.junction.params["C_J"]
        return total

    @property
    def variable(self) -> str:
        return f"phi_{self.inductor.name}"


@dataclass(frozen=True)
class CircuitNetlist:
    elements: Tuple[Element, ...]
    topology: Topology
    loops: Tuple[Loop, ...]

    def element(self, name: str) -> Element:
        for el in self.elements:
            if el.name == name:
                return el
        raise KeyError(name)

    def of_kind(self, kind: ElementKind) -> List[Element]:
        return [el for el in self.elements if el.kind == kind]

    @property
    def dynamic_loops(self) -> List[Loop]:
        return [lp for lp in self.loops if lp.dynamic]

    def loop_of_inductor(self, name: str) -> Loop:
        for lp in self.loops:
            if lp.inductor.name == name:
                return lp
        raise KeyError(name)


def _tokenize(raw: str) -> List[Tuple[str, int]]:
    """Split a line into (token, 1-based column) pairs, dropping comments."""
    text = raw.split("#", 1)[0]
    tokens: List[Tuple[str, int]] = []
    col = 0
    while col < len(text):
        if text[col].isspace():
            col += 1
            continue
        start = col
        while col < len(text) and not text[col].isspace():
            col += 1
        tokens.append((text[start:col], start + 1))
    return tokens


def _parse_line(tokens: List[Tuple[str, int]], line_no: int) -> Element:
    keyword, kw_col = tokens[0]
    grammar = _GRAMMAR.get(keyword.upper())
    if grammar is None:
        raise NetlistError(f"unknown element keyword '{keyword}'", line_no, kw_col)
    kind, n_terms, param_defs = grammar
    expected = 2 + n_terms + len(param_defs)
    if len(tokens) != expected:
        col = tokens[min(len(tokens), expected) - 1][1]
        raise NetlistError(
            f"{keyword.upper()} expects {expected - 1} fields after the keyword, got {len(tokens) - 1}",
            line_no,
            col,
        )
    name = tokens[1][0]
    terminals = tuple(tok for tok, _ in tokens[2 : 2 + n_terms])
    params: Dict[str, float] = {}
    for (param, dimension, positive), (tok, col) in zip(param_defs, tokens[2 + n_terms :]):
        try:
            value = parse_quantity(tok, dimension)
        except UnitError as exc:
            raise NetlistError(str(exc), line_no, col) from exc
        if positive and not value > 0:
            raise NetlistError(f"non-positive {_PARAM_LABELS[param]} {tok}", line_no, col)
        params[param] = value
    if kind in BRANCH_KINDS and terminals[0] == terminals[1]:
        raise NetlistError(f"element '{name}' is shorted ({terminals[0]} to itself)", line_no, tokens[2][1])
    return Element(kind=kind, name=name, terminals=terminals, params=params, line=line_no)


def _build_loops(elements: Iterable[Element]) -> List[Loop]:
    groups: Dict[frozenset, List[Element]] = {}
    for el in elements:
        if el.kind in BRANCH_KINDS:
            groups.setdefault(el.node_pair, []).append(el)

    loops: List[Loop] = []
    for pair, members in groups.items():
        by_kind: Dict[ElementKind, List[Element]] = {}
        for el in members:
            by_kind.setdefault(el.kind, []).append(el)
        inductors = by_kind.get(ElementKind.INDUCTOR, [])
        junctions = by_kind.get(ElementKind.JOSEPHSON_JUNCTION, [])
        capacitors = by_kind.get(ElementKind.CAPACITOR, [])
        if not inductors:
            offender = members[0]
            raise TopologyError("branch without an inductor closing the loop", offender.name, offender.line)
        for extra in (inductors[1:], junctions[1:], capacitors[1:]):
            if extra:
                raise TopologyError("more than one element of this kind in a loop", extra[0].name, extra[0].line)
        nodes = tuple(sorted(pair))
        loops.append(
            Loop(
                nodes=(nodes[0], nodes[1]),
                inductor=inductors[0],
                junction=junctions[0] if junctions else None,
                capacitor=capacitors[0] if capacitors else None,
            )
        )
    loops.sort(key=lambda lp: lp.inductor.line)
    return loops


def classify_topology(elements: List[Element], loops: List[Loop]) -> Topology:
    """Match the circuit against the supported catalog or raise TopologyError."""
    by_name = {el.name: el for el in elements}
    couplings = [el for el in elements if el.kind == ElementKind.MUTUAL_COUPLING]
    biases = [el for el in elements if el.kind in (ElementKind.BIAS_CURRENT, ElementKind.FLUX_BIAS)]
    inductor_loop = {lp.inductor.name: lp for lp in loops}

    for el in couplings + biases:
        for target in el.terminals:
            if target not in by_name:
                raise TopologyError(f"references unknown element '{target}'", el.name, el.line)
            if by_name[target].kind != ElementKind.INDUCTOR:
                raise TopologyError(f"'{target}' is not an inductor", el.name, el.line)
    for k in couplings:
        if k.terminals[0] == k.terminals[1]:
            raise TopologyError("couples an inductor to itself", k.name, k.line)
    if len(couplings) > 1:
        raise TopologyError("at most one mutual coupling is supported", couplings[1].name, couplings[1].line)
    if len(biases) > 1:
        raise TopologyError("at most one bias source is supported", biases[1].name, biases[1].line)

    dynamic = [lp for lp in loops if lp.dynamic]
    static = [lp for lp in loops if not lp.dynamic]
    if not dynamic:
        first = loops[0].inductor if loops else (elements[0] if elements else None)
        raise TopologyError(
            "no loop with a capacitor or junction",
            first.name if first else None,
            first.line if first else None,
        )
    if len(dynamic) > 2:
        extra = dynamic[2].inductor
        raise TopologyError("more than two dynamical loops", extra.name, extra.line)
    if len(static) > 1:
        extra = static[1].inductor
        raise TopologyError("more than one bias loop", extra.name, extra.line)

    if len(dynamic) == 2:
        squids = [lp for lp in dynamic if lp.junction is not None]
        resonators = [lp for lp in dynamic if lp.junction is None]
        if len(squids) != 1 or len(resonators) != 1:
            offender = dynamic[1].inductor
            raise TopologyError("two loops must be one LC resonator and one rf-SQUID", offender.name, offender.line)
        if static:
            raise TopologyError("bias loop not supported with a coupled pair", static[0].inductor.name, static[0].inductor.line)
        if biases:
            raise TopologyError("bias source not supported with a coupled pair", biases[0].name, biases[0].line)
        pair = {squids[0].inductor.name, resonators[0].inductor.name}
        if not couplings or set(couplings[0].terminals) != pair:
            offender = couplings[0] if couplings else resonators[0].inductor
            raise TopologyError("resonator and rf-SQUID inductors must be coupled", offender.name, offender.line)
        return Topology.COUPLED_PAIR

    primary = dynamic[0]
    if static:
        bias_loop = static[0]
        if not couplings or set(couplings[0].terminals) != {primary.inductor.name, bias_loop.inductor.name}:
            raise TopologyError("bias loop is not coupled to the primary loop", bias_loop.inductor.name, bias_loop.inductor.line)
        if not biases or biases[0].kind != ElementKind.FLUX_BIAS or biases[0].terminals[0] != bias_loop.inductor.name:
            raise TopologyError("bias loop carries no flux bias", bias_loop.inductor.name, bias_loop.inductor.line)
        if primary.junction is None:
            raise TopologyError("flux-biased loop needs a junction", primary.inductor.name, primary.inductor.line)
        return Topology.FLUX_QUBIT
    if couplings:
        raise TopologyError("coupling without a partner loop", couplings[0].name, couplings[0].line)
    if biases:
        bias = biases[0]
        target_loop = inductor_loop[bias.terminals[0]]
        if target_loop is not primary:
            raise TopologyError("bias targets an inductor outside the primary loop", bias.name, bias.line)
        if primary.junction is None:
            raise TopologyError("bias needs a junction in the loop", bias.name, bias.line)
        if bias.kind == ElementKind.BIAS_CURRENT:
            return Topology.CURRENT_BIASED_JJ
        return Topology.FLUX_QUBIT
    if primary.junction is not None:
        return Topology.RF_SQUID
    if primary.capacitor is None or primary.inductor is None:
        raise TopologyError("LC loop needs a capacitor and an inductor", primary.inductor.name, primary.inductor.line)
    return Topology.LC


def parse_netlist(text: str) -> CircuitNetlist:
    elements: List[Element] = []
    seen: Dict[str, int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(raw)
        if not tokens:
            continue
        el = _parse_line(tokens, line_no)
        if el.name in seen:
            raise NetlistError(f"duplicate element name '{el.name}' (first defined on line {seen[el.name]})", line_no, tokens[1][1])
        seen[el.name] = line_no
        elements.append(el)
    if not elements:
        raise NetlistError("netlist contains no elements")

    loops = _build_loops(elements)
    topology = classify_topology(elements, loops)
    LOG.debug("Parsed %d elements, %d loops, topology=%s", len(elements), len(loops), topology.value)
    return CircuitNetlist(elements=tuple(elements), topology=topology, loops=tuple(loops))
