"""Graph-to-graph constructions on HEDGes.

Covers latent projection (marginalization), augmentation by explicit latent
nodes, generalized moralization, acyclification, acyclic augmentation, the
SCC quotient, skeletons and induced directed mixed graphs, plus undirected
marginalization for the resulting undirected graphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping

from .core import (
    Hedg,
    UnknownNode,
    _reach,
    districts,
    maximalize,
    node_set,
    scc_partition,
)

__all__ = [
    "UGraph",
    "latent_label",
    "marginalize",
    "marginalize_to",
    "augment",
    "moralize",
    "acyclify",
    "acyclic_augment",
    "scc_quotient",
    "skeleton",
    "induced_dmg",
    "umarginalize",
    "intervene_graph",
]


@dataclass(frozen=True)
class UGraph:
    """Undirected simple graph without self-loops."""

    nodes: frozenset[str]
    edges: frozenset[frozenset[str]] = frozenset()

    def __post_init__(self) -> None:
        nodes = frozenset(self.nodes)
        edges = frozenset(frozenset(e) for e in self.edges)
        for e in edges:
            if len(e) != 2:
                raise ValueError(f"undirected edges join two distinct nodes, got {sorted(e)}")
            if not e <= nodes:
                raise UnknownNode(f"edge {sorted(e)} uses a node outside the graph")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def build(cls, nodes: Iterable[str] = (), edges: Iterable[Iterable[str]] = ()) -> "UGraph":
        edges = [frozenset(e) for e in edges]
        ns = set(nodes).union(*edges) if edges else set(nodes)
        return cls(frozenset(ns), frozenset(edges))

    @cached_property
    def adj(self) -> Mapping[str, frozenset[str]]:
        acc: dict[str, set[str]] = {v: set() for v in self.nodes}
        for e in self.edges:
            a, b = tuple(e)
            acc[a].add(b)
            acc[b].add(a)
        return {v: frozenset(s) for v, s in acc.items()}

    def neighbours(self, v: str) -> frozenset[str]:
        return self.adj[v]

    def sorted_edges(self) -> list[tuple[str, str]]:
        return sorted(tuple(sorted(e)) for e in self.edges)

    def is_complete(self, s: Iterable[str]) -> bool:
        s = list(s)
        return all(b in self.adj[a] for a, b in combinations(s, 2))

    def induced(self, a: Iterable[str]) -> "UGraph":
        a = frozenset(a)
        return UGraph(a, frozenset(e for e in self.edges if e <= a))

    def __repr__(self) -> str:
        edges = ", ".join(f"{a}-{b}" for a, b in self.sorted_edges())
        return f"UGraph(nodes={sorted(self.nodes)}, edges=[{edges}])"


def latent_label(f: Iterable[str]) -> str:
    """Name of the latent node standing for the maximal hyperedge ``f``."""
    return "e{" + ",".join(sorted(f)) + "}"


def _through(g: Hedg, start: str, u: frozenset[str]) -> frozenset[str]:
    """Non-``u`` nodes reachable from ``start`` by a path whose interior lies in ``u``."""
    out: set[str] = set()
    seen: set[str] = set()
    stack = [start]
    while stack:
        v = stack.pop()
        for w in g.ch[v]:
            if w in u:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
            else:
                out.add(w)
    return frozenset(out)


def marginalize(g: Hedg, u: Iterable[str]) -> Hedg:
    """Latent projection removing the nodes ``u``."""
    u = g.check(u)
    if not u:
        return g
    keep = g.nodes - u
    edges = {(v, w) for v in keep for w in _through(g, v, u)}
    reach = {x: _through(g, x, u) for x in u}
    hyper = []
    for f in g.maximal_hyperedges():
        hit = f & u
        if hit:
            hyper.append((f - u).union(*(reach[x] for x in hit)))
        else:
            hyper.append(f)
    return Hedg(keep, frozenset(edges), maximalize(hyper))


def marginalize_to(g: Hedg, keep: Iterable[str]) -> Hedg:
    """Latent projection onto ``keep``."""
    keep = g.check(keep)
    return marginalize(g, g.nodes - keep)


def augment(g: Hedg) -> Hedg:
    """Add one latent parent per maximal hyperedge; the result has trivial ``H``."""
    edges = set(g.edges)
    nodes = set(g.nodes)
    for f in g.maximal_hyperedges():
        e = latent_label(f)
        if e in g.nodes:
            raise ValueError(f"latent label {e} collides with an observed node")
        nodes.add(e)
        edges.update((e, v) for v in f)
    return Hedg(frozenset(nodes), frozenset(edges))


def moralize(g: Hedg) -> UGraph:
    """Generalized moralization: each district together with its parents becomes complete."""
    edges: set[frozenset[str]] = set()
    for d in districts(g):
        block = set(d)
        for v in d:
            block |= g.pa[v]
        edges.update(frozenset(p) for p in combinations(sorted(block), 2))
    return UGraph(g.nodes, frozenset(edges))


def acyclify(g: Hedg) -> Hedg:
    """Redirect edges onto whole SCCs and spread hyperedges over SCCs; yields an mDAG."""
    sc = g._scc_of
    edges = set()
    for v, w in g.edges:
        if v in sc[w]:
            continue
        edges.update((v, x) for x in sc[w])
    hyper = [frozenset().union(*(sc[v] for v in f)) for f in g.maximal_hyperedges()]
    return Hedg(g.nodes, frozenset(edges), maximalize(hyper))


def acyclic_augment(g: Hedg) -> Hedg:
    """DAG on observed and latent nodes: acyclified augmented edges, trivial ``H``."""
    a = acyclify(augment(g))
    return Hedg(a.nodes, a.edges)


def scc_quotient(g: Hedg) -> Hedg:
    """DAG of SCC blocks, each named by its smallest member."""
    rep = {v: min(b) for b in scc_partition(g) for v in b}
    edges = {(rep[a], rep[b]) for a, b in g.edges if rep[a] != rep[b]}
    hyper = [frozenset(rep[v] for v in f) for f in g.hyperedges]
    return Hedg(frozenset(rep.values()), frozenset(edges), maximalize(hyper))


def skeleton(g: Hedg) -> UGraph:
    """Undirected version of directed edges and bidirected pairs."""
    edges = {frozenset(e) for e in g.edges if e[0] != e[1]}
    for f in g.hyperedges:
        edges.update(frozenset(p) for p in combinations(sorted(f), 2))
    return UGraph(g.nodes, frozenset(edges))


def induced_dmg(g: Hedg) -> Hedg:
    """Keep only hyperedges of size at most two."""
    pairs = {frozenset(p) for f in g.hyperedges for p in combinations(sorted(f), 2)}
    return Hedg(g.nodes, g.edges, frozenset(pairs))


def umarginalize(ug: UGraph, w: Iterable[str]) -> UGraph:
    """Remove ``w``, joining survivors connected through a path inside ``w``."""
    w = node_set(w)
    bad = w - ug.nodes
    if bad:
        raise UnknownNode(f"unknown node(s): {', '.join(sorted(bad))}")
    keep = ug.nodes - w
    edges = {e for e in ug.edges if e <= keep}
    inner = {v: ug.adj[v] & w for v in w}
    seen: set[str] = set()
    for start in sorted(w):
        if start in seen:
            continue
        comp = _reach([start], inner)
        seen |= comp
        border = sorted(frozenset().union(*(ug.adj[v] for v in comp)) & keep)
        edges.update(frozenset(p) for p in combinations(border, 2))
    return UGraph(keep, frozenset(edges))


def intervene_graph(g: Hedg, targets: Iterable[str]) -> Hedg:
    """Post-intervention graph: edges into targets cut, targets removed from hyperedges."""
    t = g.check(targets)
    edges = frozenset((a, b) for a, b in g.edges if b not in t)
    hyper = maximalize(f - t for f in g.hyperedges)
    return Hedg(g.nodes, edges, hyper)
