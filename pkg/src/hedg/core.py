"""Directed graphs with hyperedges (HEDGes) and their primitive relations.

A HEDG ``(V, E, H)`` has a finite node set, directed edges (self-loops are
allowed) and a simplicial complex ``H`` of node sets describing latent
confounding.  Only the inclusion-maximal members of ``H`` with at least two
nodes are stored; singletons and all subsets are implicit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping

__all__ = [
    "HedgError",
    "UnknownNode",
    "SizeLimit",
    "NodeSet",
    "Hedg",
    "Classification",
    "node_set",
    "maximalize",
    "parents",
    "children",
    "ancestors",
    "descendants",
    "nondescendants",
    "scc",
    "scc_partition",
    "district",
    "districts",
    "induced_subhedg",
    "ancestral_closure",
    "is_ancestral",
    "loop_set",
    "classify",
    "ancestral_subsets",
]

NodeSet = frozenset


class HedgError(Exception):
    """Base class for library errors."""


class UnknownNode(HedgError, KeyError):
    """A node label is not part of the graph."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else "unknown node"


class SizeLimit(HedgError):
    """An exhaustive procedure would exceed its configured bound."""


def node_set(items: Iterable[str] | str | None) -> frozenset[str]:
    """Coerce labels into a frozenset; a bare string is one label."""
    if items is None:
        return frozenset()
    if isinstance(items, str):
        return frozenset([items])
    return frozenset(items)


def maximalize(sets: Iterable[Iterable[str]]) -> frozenset[frozenset[str]]:
    """Keep the inclusion-maximal sets with at least two members."""
    cands = sorted({frozenset(s) for s in sets if len(frozenset(s)) >= 2}, key=len, reverse=True)
    kept: list[frozenset[str]] = []
    for s in cands:
        if not any(s <= k for k in kept):
            kept.append(s)
    return frozenset(kept)


def _sort_key(s: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(s))


@dataclass(frozen=True)
class Hedg:
    """Immutable HEDG value.

    Parameters
    ----------
    nodes
        Node labels.
    edges
        Ordered pairs ``(v, w)`` meaning ``v -> w``.
    hyperedges
        Node sets; they are re-maximalized on construction.
    """

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]] = frozenset()
    hyperedges: frozenset[frozenset[str]] = frozenset()

    def __post_init__(self) -> None:
        nodes = frozenset(self.nodes)
        edges = frozenset((str(a), str(b)) for a, b in self.edges)
        hyper = maximalize(self.hyperedges)
        for v in nodes:
            if not isinstance(v, str) or not v:
                raise ValueError(f"node labels must be non-empty strings, got {v!r}")
        for a, b in edges:
            if a not in nodes or b not in nodes:
                raise UnknownNode(f"edge {a}->{b} uses a node outside the graph")
        for f in hyper:
            if not f <= nodes:
                raise UnknownNode(f"hyperedge {sorted(f)} uses a node outside the graph")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "hyperedges", hyper)

    @classmethod
    def build(
        cls,
        nodes: Iterable[str] = (),
        edges: Iterable[tuple[str, str]] = (),
        hyperedges: Iterable[Iterable[str]] = (),
    ) -> "Hedg":
        """Build a graph; nodes mentioned by edges or hyperedges are added."""
        edges = [(str(a), str(b)) for a, b in edges]
        hyperedges = [frozenset(map(str, f)) for f in hyperedges]
        ns = set(map(str, nodes))
        for a, b in edges:
            ns.update((a, b))
        for f in hyperedges:
            ns.update(f)
        return cls(frozenset(ns), frozenset(edges), frozenset(hyperedges))

    # canonical views

    def sorted_nodes(self) -> list[str]:
        return sorted(self.nodes)

    def sorted_edges(self) -> list[tuple[str, str]]:
        return sorted(self.edges)

    def sorted_hyperedges(self) -> list[tuple[str, ...]]:
        return sorted(_sort_key(f) for f in self.hyperedges)

    def canonical(self) -> tuple:
        return (tuple(self.sorted_nodes()), tuple(self.sorted_edges()), tuple(self.sorted_hyperedges()))

    def maximal_hyperedges(self) -> list[frozenset[str]]:
        """All maximal members of ``H`` including uncovered singletons, canonically ordered."""
        covered = set().union(*self.hyperedges) if self.hyperedges else set()
        out = list(self.hyperedges) + [frozenset([v]) for v in self.nodes if v not in covered]
        return sorted(out, key=_sort_key)

    def in_h(self, s: Iterable[str]) -> bool:
        """Membership in the simplicial complex ``H``."""
        s = frozenset(s)
        if len(s) <= 1:
            return s <= self.nodes
        return any(s <= f for f in self.hyperedges)

    def __repr__(self) -> str:
        edges = ", ".join(f"{a}->{b}" for a, b in self.sorted_edges())
        hyper = ", ".join("{" + ",".join(f) + "}" for f in self.sorted_hyperedges())
        return f"Hedg(nodes={self.sorted_nodes()}, edges=[{edges}], hyperedges=[{hyper}])"

    # cached adjacency

    @cached_property
    def pa(self) -> Mapping[str, frozenset[str]]:
        acc: dict[str, set[str]] = {v: set() for v in self.nodes}
        for a, b in self.edges:
            acc[b].add(a)
        return {v: frozenset(s) for v, s in acc.items()}

    @cached_property
    def ch(self) -> Mapping[str, frozenset[str]]:
        acc: dict[str, set[str]] = {v: set() for v in self.nodes}
        for a, b in self.edges:
            acc[a].add(b)
        return {v: frozenset(s) for v, s in acc.items()}

    @cached_property
    def sib(self) -> Mapping[str, frozenset[str]]:
        """Bidirected neighbours: nodes sharing a stored hyperedge."""
        acc: dict[str, set[str]] = {v: set() for v in self.nodes}
        for f in self.hyperedges:
            for v in f:
                acc[v].update(f)
        return {v: frozenset(s - {v}) for v, s in acc.items()}

    @cached_property
    def _scc_of(self) -> Mapping[str, frozenset[str]]:
        out: dict[str, frozenset[str]] = {}
        for block in _tarjan(self.sorted_nodes(), self.ch):
            for v in block:
                out[v] = block
        return out

    @cached_property
    def _anc1(self) -> Mapping[str, frozenset[str]]:
        return {v: _reach([v], self.pa) for v in self.nodes}

    @cached_property
    def _desc1(self) -> Mapping[str, frozenset[str]]:
        return {v: _reach([v], self.ch) for v in self.nodes}

    def check(self, s: Iterable[str]) -> frozenset[str]:
        s = node_set(s)
        bad = s - self.nodes
        if bad:
            raise UnknownNode(f"unknown node(s): {', '.join(sorted(bad))}")
        return s


def _reach(start: Iterable[str], adj: Mapping[str, frozenset[str]]) -> frozenset[str]:
    seen = set(start)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return frozenset(seen)


def _tarjan(order: list[str], succ: Mapping[str, frozenset[str]]) -> list[frozenset[str]]:
    """Iterative Tarjan; per-call overhead matters more than asymptotics here."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    blocks: list[frozenset[str]] = []
    counter = 0
    for root in order:
        if root in index:
            continue
        work = [(root, iter(sorted(succ[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(succ[w]))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                block = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    block.add(w)
                    if w == v:
                        break
                blocks.append(frozenset(block))
    return blocks


def parents(g: Hedg, s: Iterable[str]) -> frozenset[str]:
    """Union of the parent sets of ``s``."""
    s = g.check(s)
    return frozenset().union(*(g.pa[v] for v in s))


def children(g: Hedg, s: Iterable[str]) -> frozenset[str]:
    """Union of the child sets of ``s``."""
    s = g.check(s)
    return frozenset().union(*(g.ch[v] for v in s))


def ancestors(g: Hedg, s: Iterable[str]) -> frozenset[str]:
    """Reflexive ancestors: ``s`` plus every node with a directed path into ``s``."""
    s = g.check(s)
    return frozenset().union(*(g._anc1[v] for v in s))


def descendants(g: Hedg, s: Iterable[str]) -> frozenset[str]:
    """Reflexive descendants."""
    s = g.check(s)
    return frozenset().union(*(g._desc1[v] for v in s))


def nondescendants(g: Hedg, s: Iterable[str]) -> frozenset[str]:
    return g.nodes - descendants(g, s)


def scc(g: Hedg, v: str) -> frozenset[str]:
    """Strongly connected component of ``v`` (``Anc(v) & Desc(v)``)."""
    g.check([v])
    return g._scc_of[v]


def scc_partition(g: Hedg) -> list[frozenset[str]]:
    """SCC blocks ordered by their smallest member label."""
    return sorted(set(g._scc_of.values()), key=min)


def district(g: Hedg, v: str) -> frozenset[str]:
    """Bidirected-connected component of ``v``."""
    g.check([v])
    return _reach([v], g.sib)


def districts(g: Hedg) -> list[frozenset[str]]:
    seen: set[str] = set()
    out = []
    for v in g.sorted_nodes():
        if v not in seen:
            d = _reach([v], g.sib)
            seen |= d
            out.append(d)
    return out


def induced_subhedg(g: Hedg, a: Iterable[str]) -> Hedg:
    """Sub-HEDG on ``a``: edges restricted, hyperedges intersected then re-maximalized."""
    a = g.check(a)
    edges = frozenset((x, y) for x, y in g.edges if x in a and y in a)
    hyper = frozenset(f & a for f in g.hyperedges)
    return Hedg(a, edges, hyper)


def ancestral_closure(g: Hedg, s: Iterable[str]) -> Hedg:
    return induced_subhedg(g, ancestors(g, s))


def is_ancestral(g: Hedg, a: Iterable[str]) -> bool:
    a = g.check(a)
    return ancestors(g, a) == a


def _strongly_connected(nodes: frozenset[str], ch: Mapping[str, frozenset[str]]) -> bool:
    if len(nodes) <= 1:
        return True
    start = min(nodes)
    sub = {v: ch[v] & nodes for v in nodes}
    if _reach([start], sub) != nodes:
        return False
    rev: dict[str, set[str]] = {v: set() for v in nodes}
    for v, ws in sub.items():
        for w in ws:
            rev[w].add(v)
    return _reach([start], {v: frozenset(s) for v, s in rev.items()}) == nodes


def loop_set(g: Hedg, limit: int = 1 << 16) -> list[frozenset[str]]:
    """All node sets that are strongly connected in their induced sub-HEDG.

    Every loop lies inside one SCC, so subsets are enumerated per block.
    """
    out: list[frozenset[str]] = []
    for block in scc_partition(g):
        if (1 << len(block)) > limit:
            raise SizeLimit(f"SCC of size {len(block)} has too many subsets to enumerate")
        members = sorted(block)
        for k in range(1, len(members) + 1):
            for combo in combinations(members, k):
                s = frozenset(combo)
                if _strongly_connected(s, g.ch):
                    out.append(s)
    return sorted(out, key=lambda s: (len(s), _sort_key(s)))


@dataclass(frozen=True)
class Classification:
    is_dag: bool
    is_mdag: bool
    is_dmg: bool
    is_admg: bool


def classify(g: Hedg) -> Classification:
    acyclic = all(len(b) == 1 for b in g._scc_of.values()) and not any(a == b for a, b in g.edges)
    dmg = all(len(f) <= 2 for f in g.hyperedges)
    return Classification(
        is_dag=acyclic and not g.hyperedges,
        is_mdag=acyclic,
        is_dmg=dmg,
        is_admg=acyclic and dmg,
    )


def ancestral_subsets(g: Hedg, required: Iterable[str] = (), limit: int = 1 << 16) -> list[frozenset[str]]:
    """Every ancestral node set containing ``required``.

    Enumerated as down-sets of the SCC condensation.
    """
    required = g.check(required)
    base = ancestors(g, required)
    blocks = [b for b in scc_partition(g) if not b <= base]
    if (1 << len(blocks)) > limit:
        raise SizeLimit(f"{len(blocks)} free SCC blocks exceed the ancestral-set bound")
    # a block may be added only together with all its ancestors
    need = [ancestors(g, b) - base for b in blocks]
    out: list[frozenset[str]] = []
    for mask in range(1 << len(blocks)):
        chosen = base.union(*(blocks[i] for i in range(len(blocks)) if mask >> i & 1))
        if all(need[i] <= chosen for i in range(len(blocks)) if mask >> i & 1):
            out.append(chosen)
    return sorted(out, key=lambda s: (len(s), _sort_key(s)))
