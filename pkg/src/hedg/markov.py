"""Exhaustive checkers for Markov properties of a finite distribution on a HEDG.

Global properties quantify over elementary statements ``{x} _||_ {y} | Z``
with ``x < y`` and ``Z`` disjoint from both; for semi-graphoids these
determine all other statements.  Marginal properties need an explicit
latent witness distribution over the augmented node set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Callable, Iterable, Iterator, Sequence

from .core import (
    Hedg,
    HedgError,
    SizeLimit,
    ancestral_subsets,
    induced_subhedg,
    nondescendants,
)
from .dist import (
    CI_TOL,
    FACTOR_TV_THRESHOLD,
    FiniteDist,
    ci_defect,
    factorizes_exactly,
    ipf_fit,
    marginal,
)
from .orders import classify_order, pred_hedg
from .separation import SepQuery, d_separated, u_separated
from .transform import UGraph, acyclic_augment, acyclify, augment, marginalize, marginalize_to, moralize

__all__ = [
    "PropertyKind",
    "Violation",
    "MarkovReport",
    "HierarchyReport",
    "MissingOrder",
    "MissingWitness",
    "WitnessMarginalMismatch",
    "elementary_triples",
    "implied_separations",
    "maximal_cliques",
    "check",
    "hierarchy_audit",
]

MAX_NODES = 10


class PropertyKind(str, Enum):
    dGMP = "dGMP"
    gdGMP = "gdGMP"
    dLMP = "dLMP"
    oLMP = "oLMP"
    rFP = "rFP"
    auGMP = "auGMP"
    ruGMP = "ruGMP"
    auLMP = "auLMP"
    ruLMP = "ruLMP"
    auPMP = "auPMP"
    ruPMP = "ruPMP"
    aFP_ipf = "aFP_ipf"
    witness_mdGMP = "witness_mdGMP"
    witness_mgdGMP = "witness_mgdGMP"
    witness_smgdGMP = "witness_smgdGMP"
    witness_mdLMP = "witness_mdLMP"

    def __str__(self) -> str:
        return self.value


class MissingOrder(HedgError):
    pass


class MissingWitness(HedgError):
    pass


class WitnessMarginalMismatch(HedgError):
    pass


def _fmt(s: Iterable[str]) -> str:
    return "{" + ",".join(sorted(s)) + "}"


@dataclass(frozen=True)
class Violation:
    """A failed statement with its measured defect."""

    statement: str
    defect: float
    sets: tuple[frozenset[str], ...] = ()


@dataclass
class MarkovReport:
    property: str
    violations: list[Violation] = field(default_factory=list)
    inconclusive: list[Violation] = field(default_factory=list)
    checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def max_defect(self) -> float:
        return max((v.defect for v in self.violations + self.inconclusive), default=0.0)

    def to_dict(self) -> dict:
        def row(v: Violation) -> dict:
            return {"statement": v.statement, "defect": v.defect}

        return {
            "property": self.property,
            "pass": self.passed,
            "checked": self.checked,
            "violations": [row(v) for v in self.violations],
            "inconclusive": [row(v) for v in self.inconclusive],
        }


def elementary_triples(nodes: Iterable[str]) -> Iterator[SepQuery]:
    """All ``({x}, {y}, Z)`` with ``x < y`` and ``Z`` a subset of the remaining nodes."""
    ns = sorted(nodes)
    for x, y in combinations(ns, 2):
        rest = [v for v in ns if v != x and v != y]
        for k in range(len(rest) + 1):
            for z in combinations(rest, k):
                yield SepQuery(frozenset([x]), frozenset([y]), frozenset(z))


def implied_separations(g: Hedg, criterion: str = "d") -> list[SepQuery]:
    """Elementary separation statements of ``g`` under ``"d"`` or ``"sigma"``."""
    if len(g.nodes) > MAX_NODES:
        raise SizeLimit(f"implied separations are enumerated for at most {MAX_NODES} nodes")
    if criterion in ("d",):
        h = g
    elif criterion in ("sigma", "σ", "s"):
        h = acyclify(g)
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    return [q for q in elementary_triples(g.nodes) if d_separated(h, q)]


def maximal_cliques(ug: UGraph) -> list[frozenset[str]]:
    """Bron-Kerbosch with pivoting."""
    out: list[frozenset[str]] = []

    def bk(r: frozenset[str], p: set[str], x: set[str]) -> None:
        if not p and not x:
            out.append(r)
            return
        pivot = max(p | x, key=lambda u: len(ug.adj[u] & p))
        for v in sorted(p - ug.adj[pivot]):
            bk(r | {v}, p & ug.adj[v], x & ug.adj[v])
            p = p - {v}
            x = x | {v}

    bk(frozenset(), set(ug.nodes), set())
    return sorted(out, key=lambda c: (-len(c), sorted(c)))


class _Checker:
    def __init__(self, p: FiniteDist, name: str, tol: float) -> None:
        self.p = p
        self.report = MarkovReport(name)
        self.tol = tol

    def ci(self, x: Iterable[str], y: Iterable[str], z: Iterable[str]) -> None:
        x, y, z = frozenset(x), frozenset(y), frozenset(z)
        self.report.checked += 1
        d = ci_defect(self.p, x, y, z)
        if d > self.tol:
            self.report.violations.append(Violation(f"{_fmt(x)} _||_ {_fmt(y)} | {_fmt(z)}", d, (x, y, z)))

    def global_(self, nodes: Iterable[str], separated: Callable[[SepQuery], bool]) -> None:
        for q in elementary_triples(nodes):
            if separated(q):
                self.ci(*q)


def _check_vars(g: Hedg, p: FiniteDist) -> None:
    if set(p.names) != set(g.nodes):
        raise ValueError("distribution variables must equal the graph's nodes")
    if len(g.nodes) > MAX_NODES:
        raise SizeLimit(f"Markov checks are exhaustive; at most {MAX_NODES} nodes")


def _local(c: _Checker, h: Hedg, v: str) -> None:
    m = moralize(h)
    c.ci([v], h.nodes - {v}, m.adj[v])


def check(
    g: Hedg,
    p: FiniteDist,
    kind: PropertyKind | str,
    order: Sequence[str] | None = None,
    witness: FiniteDist | None = None,
    tol: float = CI_TOL,
    tv_threshold: float = FACTOR_TV_THRESHOLD,
) -> MarkovReport:
    """Check one Markov property of ``(g, p)`` exhaustively."""
    kind = PropertyKind(str(kind))
    _check_vars(g, p)
    name = kind.value

    if kind.name.startswith("witness_"):
        if witness is None:
            raise MissingWitness(f"{name} needs a witness distribution over the augmented nodes")
        aug = augment(g)
        if set(witness.names) != set(aug.nodes):
            raise MissingWitness("witness variables must be the observed nodes plus one latent per maximal hyperedge")
        obs = marginal(witness, g.nodes).reorder(p.names)
        if obs.variables != p.variables or not obs.allclose(p, 1e-9):
            raise WitnessMarginalMismatch("witness marginal on the observed nodes differs from the distribution")
        target, inner = {
            PropertyKind.witness_mdGMP: (aug, PropertyKind.dGMP),
            PropertyKind.witness_mgdGMP: (acyclify(aug), PropertyKind.dGMP),
            PropertyKind.witness_smgdGMP: (acyclic_augment(g), PropertyKind.dGMP),
            PropertyKind.witness_mdLMP: (aug, PropertyKind.dLMP),
        }[kind]
        rep = check(target, witness, inner, tol=tol)
        rep.property = name
        return rep

    c = _Checker(p, name, tol)
    if kind is PropertyKind.dGMP:
        c.global_(g.nodes, lambda q: d_separated(g, q))
    elif kind is PropertyKind.gdGMP:
        acy = acyclify(g)
        c.global_(g.nodes, lambda q: d_separated(acy, q))
    elif kind is PropertyKind.dLMP:
        for v in g.sorted_nodes():
            sc = g._scc_of[v]
            allowed = nondescendants(g, [v]) | sc
            for a in ancestral_subsets(g, [v]):
                if not a <= allowed:
                    continue
                ha = induced_subhedg(g, a)
                free = sorted((sc - {v}) & a)
                for k in range(len(free) + 1):
                    for s in combinations(free, k):
                        _local(c, marginalize(ha, s), v)
    elif kind in (PropertyKind.oLMP, PropertyKind.rFP):
        if order is None:
            raise MissingOrder(f"{name} needs a total order")
        for v in order:
            pr = pred_hedg(g, order, v)
            for a in ancestral_subsets(pr, [v]):
                _local(c, induced_subhedg(pr, a), v)
    elif kind in (PropertyKind.auGMP, PropertyKind.auLMP, PropertyKind.auPMP):
        for a in ancestral_subsets(g):
            if a:
                _undirected(c, kind.name[2:], moralize(induced_subhedg(g, a)))
    elif kind in (PropertyKind.ruGMP, PropertyKind.ruLMP, PropertyKind.ruPMP):
        ns = g.sorted_nodes()
        for k in range(1, len(ns) + 1):
            for w in combinations(ns, k):
                _undirected(c, kind.name[2:], moralize(marginalize_to(g, w)))
    elif kind is PropertyKind.aFP_ipf:
        for a in ancestral_subsets(g):
            if not a:
                continue
            cliques = maximal_cliques(moralize(induced_subhedg(g, a)))
            pa = marginal(p, a)
            res = ipf_fit(pa, cliques)
            exact = factorizes_exactly(pa, cliques)
            c.report.checked += 1
            v = Violation(f"factorization over cliques of moral({_fmt(a)}): TV={res.tv:.3g}", res.tv, (a,))
            if res.tv > tv_threshold:
                c.report.violations.append(v)
                if exact:
                    c.report.inconclusive.append(v)
            elif not exact:
                c.report.inconclusive.append(v)
    return c.report


def _undirected(c: _Checker, form: str, m: UGraph) -> None:
    if form == "GMP":
        c.global_(m.nodes, lambda q: u_separated(m, q))
    elif form == "LMP":
        for v in sorted(m.nodes):
            c.ci([v], m.nodes - {v}, m.adj[v])
    else:
        for v, w in combinations(sorted(m.nodes), 2):
            if w not in m.adj[v]:
                c.ci([v], [w], m.nodes - {v, w})


@dataclass
class HierarchyReport:
    flags: dict[str, bool]
    contradictions: list[str]
    reports: dict[str, MarkovReport]

    @property
    def consistent(self) -> bool:
        return not self.contradictions


def hierarchy_audit(g: Hedg, p: FiniteDist, order: Sequence[str] | None = None) -> HierarchyReport:
    """Run every applicable property and test the known implications between them."""
    kinds = [
        PropertyKind.dGMP,
        PropertyKind.gdGMP,
        PropertyKind.dLMP,
        PropertyKind.auGMP,
        PropertyKind.ruGMP,
        PropertyKind.auLMP,
        PropertyKind.ruLMP,
        PropertyKind.auPMP,
        PropertyKind.ruPMP,
        PropertyKind.aFP_ipf,
    ]
    if order is not None:
        kinds += [PropertyKind.oLMP, PropertyKind.rFP]
    reports = {k.value: check(g, p, k, order=order) for k in kinds}
    flags = {k: r.passed for k, r in reports.items()}
    afp_sure = not reports["aFP_ipf"].inconclusive

    rules: list[tuple[str, str, bool]] = []
    eq = ["dGMP", "auGMP", "ruGMP", "ruLMP", "ruPMP"]
    for a in eq:
        for b in eq:
            if a != b:
                rules.append((a, b, True))
    rules += [
        ("auGMP", "auLMP", True),
        ("auLMP", "auPMP", True),
        ("ruLMP", "auLMP", True),
        ("ruPMP", "auPMP", True),
        ("dGMP", "gdGMP", True),
        ("dGMP", "dLMP", True),
        ("aFP_ipf", "dGMP", afp_sure),
    ]
    if all(g.in_h({v, w}) for v in g.nodes for w in g._scc_of[v]):
        rules.append(("gdGMP", "dGMP", True))
    if p.is_positive():
        rules += [("auPMP", "auGMP", True), ("auPMP", "aFP_ipf", afp_sure)]
    if order is not None:
        rep = classify_order(g, order)
        rules += [("dGMP", "oLMP", True), ("oLMP", "rFP", True), ("rFP", "oLMP", True)]
        if rep.perfect_elimination:
            rules.append(("oLMP", "dGMP", True))
        if rep.assembling and rep.pseudo_topological:
            rules.append(("dLMP", "oLMP", True))
    contradictions = [f"{a} holds but {b} fails" for a, b, active in rules if active and flags[a] and not flags[b]]
    return HierarchyReport(flags, contradictions, reports)
