"""Total orders on HEDG nodes: classification and construction.

Order kinds: topological, pseudo-topological, assembling, perfect
elimination and quasi-topological (pseudo-topological plus perfect
elimination).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import Hedg, SizeLimit, ancestors, ancestral_subsets, district, induced_subhedg, scc_partition
from .transform import marginalize, moralize

__all__ = [
    "ORDER_KINDS",
    "TotalOrder",
    "OrderReport",
    "pred_hedg",
    "classify_order",
    "find_pseudo_topological",
    "find_perfect_elimination",
    "restrict_order",
    "perfect_elimination_witness",
]

ORDER_KINDS = ("topological", "pseudo_topological", "assembling", "perfect_elimination", "quasi_topological")

TotalOrder = tuple  # node labels, first to last

SEARCH_LIMIT = 12


def _as_order(g: Hedg, ord: Sequence[str]) -> tuple[str, ...]:
    ord = tuple(ord)
    if len(ord) != len(set(ord)) or set(ord) != g.nodes:
        raise ValueError("order must list every node of the graph exactly once")
    return ord


@dataclass
class OrderReport:
    """Order-kind flags with a ``(node, offending set)`` witness per failed kind."""

    flags: dict[str, bool]
    witnesses: dict[str, tuple[str, frozenset[str]]] = field(default_factory=dict)

    def __getattr__(self, name: str) -> bool:
        flags = self.__dict__.get("flags", {})
        if name in flags:
            return flags[name]
        raise AttributeError(name)


def pred_hedg(g: Hedg, ord: Sequence[str], v: str) -> Hedg:
    """Marginal HEDG on ``v`` and everything before it."""
    ord = _as_order(g, ord)
    i = ord.index(v)
    return marginalize(g, ord[i + 1 :])


def perfect_elimination_witness(p: Hedg, v: str, limit: int = 1 << 16) -> frozenset[str] | None:
    """Ancestral set ``A`` of ``p`` containing ``v`` whose moral neighbourhood of ``v`` is incomplete."""
    for a in ancestral_subsets(p, [v], limit=limit):
        m = moralize(induced_subhedg(p, a))
        if not m.is_complete(m.adj[v] | {v}):
            return a
    return None


def classify_order(g: Hedg, ord: Sequence[str], limit: int = 1 << 16) -> OrderReport:
    ord = _as_order(g, ord)
    pos = {v: i for i, v in enumerate(ord)}
    sc = g._scc_of
    wit: dict[str, tuple[str, frozenset[str]]] = {}

    for v in ord:
        bad = sorted(w for w in g.pa[v] if pos[w] >= pos[v])
        if bad:
            wit["topological"] = (v, frozenset(bad[:1]))
            break
    for v in ord:
        bad = sorted(w for w in ancestors(g, [v]) - sc[v] if pos[w] > pos[v])
        if bad:
            wit["pseudo_topological"] = (v, frozenset(bad[:1]))
            break
    for block in scc_partition(g):
        idx = sorted(pos[v] for v in block)
        between = [ord[i] for i in range(idx[0], idx[-1] + 1) if ord[i] not in block]
        if between:
            wit["assembling"] = (min(block, key=pos.get), frozenset(between[:1]))
            break
    for v in ord:
        a = perfect_elimination_witness(pred_hedg(g, ord, v), v, limit)
        if a is not None:
            wit["perfect_elimination"] = (v, a)
            break

    flags = {k: k not in wit for k in ORDER_KINDS[:4]}
    flags["quasi_topological"] = flags["pseudo_topological"] and flags["perfect_elimination"]
    if not flags["quasi_topological"]:
        wit["quasi_topological"] = wit.get("pseudo_topological") or wit["perfect_elimination"]
    return OrderReport(flags, wit)


def find_pseudo_topological(g: Hedg) -> TotalOrder:
    """Assembling pseudo-topological order.

    SCC blocks are emitted in a topological order of the condensation, the
    ready block with the smallest label first; members follow label order.
    """
    blocks = scc_partition(g)
    rep = {v: min(b) for b in blocks for v in b}
    members = {min(b): sorted(b) for b in blocks}
    preds: dict[str, set[str]] = {r: set() for r in members}
    succs: dict[str, set[str]] = {r: set() for r in members}
    for a, b in g.edges:
        ra, rb = rep[a], rep[b]
        if ra != rb:
            preds[rb].add(ra)
            succs[ra].add(rb)
    ready = [r for r in members if not preds[r]]
    heapq.heapify(ready)
    out: list[str] = []
    while ready:
        r = heapq.heappop(ready)
        out += members[r]
        for s in succs[r]:
            preds[s].discard(r)
            if not preds[s]:
                heapq.heappush(ready, s)
    return tuple(out)


def _sccs_in_one_district(g: Hedg) -> bool:
    """Sufficient condition: each SCC lies in one district of its ancestral closure."""
    for block in scc_partition(g):
        if len(block) == 1:
            continue
        a = induced_subhedg(g, ancestors(g, block))
        if not block <= district(a, min(block)):
            return False
    return True


def find_perfect_elimination(g: Hedg, max_nodes: int = SEARCH_LIMIT) -> TotalOrder | None:
    """A perfect elimination order, or ``None`` if none exists.

    Tries the sufficient SCC/district condition first.  Otherwise searches
    prefix sets: whether ``v`` may follow a prefix depends only on the set of
    earlier nodes, so memoising dead prefix sets keeps the search exact.
    """
    if _sccs_in_one_district(g):
        return find_pseudo_topological(g)
    if len(g.nodes) > max_nodes:
        raise SizeLimit(f"perfect-elimination search is limited to {max_nodes} nodes")
    nodes = g.sorted_nodes()
    dead: set[frozenset[str]] = set()
    ok_cache: dict[tuple[frozenset[str], str], bool] = {}

    def fits(prefix: frozenset[str], v: str) -> bool:
        key = (prefix, v)
        if key not in ok_cache:
            p = marginalize(g, g.nodes - prefix - {v})
            ok_cache[key] = perfect_elimination_witness(p, v) is None
        return ok_cache[key]

    def extend(prefix: frozenset[str], seq: list[str]) -> list[str] | None:
        if len(seq) == len(nodes):
            return seq
        if prefix in dead:
            return None
        for v in nodes:
            if v not in prefix and fits(prefix, v):
                found = extend(prefix | {v}, seq + [v])
                if found is not None:
                    return found
        dead.add(prefix)
        return None

    found = extend(frozenset(), [])
    return tuple(found) if found is not None else None


def restrict_order(g: Hedg, ord: Sequence[str], w: Iterable[str]) -> TotalOrder:
    """Subsequence of ``ord`` without the nodes ``w``; matches ``marginalize(g, w)``."""
    ord = _as_order(g, ord)
    w = g.check(w)
    return tuple(v for v in ord if v not in w)
