"""d-separation, sigma-separation and undirected separation.

Each directed criterion has a production algorithm and independent oracles
used for cross-checking and for extracting open paths as witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, NamedTuple, Sequence

from .core import Hedg, SizeLimit, UnknownNode, ancestors, ancestral_closure, node_set
from .transform import UGraph, acyclify, marginalize_to, moralize, skeleton, umarginalize

__all__ = [
    "SepQuery",
    "Witness",
    "AXIOMS",
    "AuditReport",
    "d_separated",
    "d_separated_paths",
    "sigma_separated",
    "sigma_separated_nodes",
    "sigma_separated_margcrit",
    "u_separated",
    "independence_model_audit",
]

PATH_LIMIT = 14

FWD, BACK, BI = "->", "<-", "<->"

Witness = tuple  # alternating node labels and edge kinds, or empty when separated


class SepQuery(NamedTuple):
    x: frozenset[str]
    y: frozenset[str]
    z: frozenset[str]

    @classmethod
    def of(cls, x: Iterable[str] | str, y: Iterable[str] | str, z: Iterable[str] | str | None = ()) -> "SepQuery":
        return cls(node_set(x), node_set(y), node_set(z))


def _query(g: Hedg, q: SepQuery | Sequence) -> SepQuery:
    x, y, z = (node_set(s) for s in q)
    for s in (x, y, z):
        g.check(s)
    return SepQuery(x, y, z)


def _ureach(adj, start: Iterable[str], blocked: frozenset[str]) -> frozenset[str]:
    seen = set(v for v in start if v not in blocked)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen and w not in blocked:
                seen.add(w)
                stack.append(w)
    return frozenset(seen)


def d_separated(g: Hedg, q: SepQuery | Sequence) -> bool:
    """d-separation via the moral graph of the ancestral closure."""
    x, y, z = _query(g, q)
    xs, ys = x - z, y - z
    if not xs or not ys:
        return True
    if xs & ys:
        return False
    m = moralize(ancestral_closure(g, x | y | z))
    return not (_ureach(m.adj, xs, z) & ys)


def sigma_separated(g: Hedg, q: SepQuery | Sequence) -> bool:
    """sigma-separation as d-separation in the acyclification."""
    q = _query(g, q)
    return d_separated(acyclify(g), q)


def u_separated(ug: UGraph, q: SepQuery | Sequence) -> bool:
    """Every path from ``x`` to ``y`` meets ``z`` (endpoints included)."""
    x, y, z = (node_set(s) for s in q)
    bad = (x | y | z) - ug.nodes
    if bad:
        raise UnknownNode(f"unknown node(s): {', '.join(sorted(bad))}")
    return not (_ureach(ug.adj, x, z) & (y - z))


def _steps(g: Hedg, v: str):
    for w in sorted(g.ch[v]):
        if w != v:
            yield FWD, w
    for w in sorted(g.pa[v]):
        if w != v:
            yield BACK, w
    for w in sorted(g.sib[v]):
        yield BI, w


def _open_path(g: Hedg, q: SepQuery, blocks) -> Witness:
    """Depth-first search for a simple path not blocked by ``blocks``.

    ``blocks(prev, k_in, v, k_out, nxt)`` decides whether interior node ``v``
    blocks the path.
    """
    if len(g.nodes) > PATH_LIMIT:
        raise SizeLimit(f"path enumeration is limited to {PATH_LIMIT} nodes")
    x, y, z = q
    xs, ys = x - z, y - z
    for start in sorted(xs):
        if start in ys:
            return (start,)
        path: list[str] = [start]
        kinds: list[str] = []
        on_path = {start}

        def dfs() -> bool:
            v = path[-1]
            for k, w in _steps(g, v):
                if w in on_path:
                    continue
                if len(path) >= 2 and blocks(path[-2], kinds[-1], v, k, w):
                    continue
                path.append(w)
                kinds.append(k)
                on_path.add(w)
                if w in ys or dfs():
                    return True
                on_path.discard(w)
                path.pop()
                kinds.pop()
            return False

        if dfs():
            out: list[str] = [path[0]]
            for k, w in zip(kinds, path[1:]):
                out += [k, w]
            return tuple(out)
    return ()


def _is_collider(k_in: str, k_out: str) -> bool:
    return k_in in (FWD, BI) and k_out in (BACK, BI)


def d_separated_paths(g: Hedg, q: SepQuery | Sequence) -> tuple[bool, Witness]:
    """d-separation by exhaustive simple-path search; returns an open path if any."""
    q = _query(g, q)
    anc_z = ancestors(g, q.z)

    def blocks(prev, k_in, v, k_out, nxt):
        if _is_collider(k_in, k_out):
            return v not in anc_z
        return v in q.z

    w = _open_path(g, q, blocks)
    return (not w, w)


def sigma_separated_nodes(g: Hedg, q: SepQuery | Sequence) -> tuple[bool, Witness]:
    """sigma-separation by path search with node-level blocking.

    A non-collider in ``z`` blocks only if the path leaves its SCC along an
    edge pointing away from it.
    """
    q = _query(g, q)
    anc_z = ancestors(g, q.z)
    sc = g._scc_of

    def blocks(prev, k_in, v, k_out, nxt):
        if _is_collider(k_in, k_out):
            return v not in anc_z
        if v not in q.z:
            return False
        return (k_out == FWD and nxt not in sc[v]) or (k_in == BACK and prev not in sc[v])

    w = _open_path(g, q, blocks)
    return (not w, w)


def sigma_separated_margcrit(g: Hedg, q: SepQuery | Sequence) -> bool:
    """sigma-separation via marginalization onto the query nodes."""
    x, y, z = _query(g, q)
    xs, ys = x - z, y - z
    if not xs or not ys:
        return True
    if xs & ys:
        return False
    w = marginalize_to(g, x | y | z)
    sc = w._scc_of
    kept = frozenset((a, b) for a, b in w.edges if a not in z or b in sc[a])
    pruned = Hedg(w.nodes, kept, w.hyperedges)
    ug = umarginalize(skeleton(pruned), z)
    return not any(b in ug.adj[a] for a in xs for b in ys)


AXIOMS = (
    "irrelevance",
    "symmetry",
    "decomposition",
    "weak_union",
    "contraction",
    "intersection",
    "composition",
)

Oracle = Callable[[frozenset, frozenset, frozenset], bool]


@dataclass
class AuditReport:
    """Violating instantiations per axiom; an empty list means the axiom holds."""

    violations: dict[str, list[tuple[frozenset, ...]]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not any(self.violations.values())

    def failed_axioms(self) -> list[str]:
        return [a for a, v in self.violations.items() if v]


def independence_model_audit(
    oracle: Oracle,
    v: Iterable[str],
    axioms: Iterable[str] = AXIOMS[:5],
    max_size: int = 6,
) -> AuditReport:
    """Exhaustively test graphoid axioms of a ternary relation on subsets of ``v``.

    Irrelevance ranges over all pairs of subsets; the other axioms range over
    pairwise disjoint ``X, Y, Z, W``.
    """
    nodes = sorted(node_set(v))
    if len(nodes) > max_size:
        raise SizeLimit(f"audit quantifies over 5^n assignments; n={len(nodes)} > {max_size}")
    axioms = list(axioms)
    unknown = set(axioms) - set(AXIOMS)
    if unknown:
        raise ValueError(f"unknown axiom(s): {sorted(unknown)}")
    cache: dict[tuple, bool] = {}

    def ci(a, b, c) -> bool:
        key = (a, b, c)
        if key not in cache:
            cache[key] = bool(oracle(a, b, c))
        return cache[key]

    report = AuditReport({a: [] for a in axioms})
    if "irrelevance" in axioms:
        subsets = [frozenset(n for n, bit in zip(nodes, bits) if bit) for bits in product((0, 1), repeat=len(nodes))]
        for a in subsets:
            for b in subsets:
                if not ci(a, b, b):
                    report.violations["irrelevance"].append((a, b, b))
    rest = [a for a in axioms if a != "irrelevance"]
    if not rest:
        return report
    for labels in product(range(5), repeat=len(nodes)):
        parts = [[], [], [], [], []]
        for n, lab in zip(nodes, labels):
            parts[lab].append(n)
        X, Y, Z, W = (frozenset(p) for p in parts[:4])
        for ax in rest:
            bad = False
            if ax == "symmetry":
                bad = not W and ci(X, Y, Z) and not ci(Y, X, Z)
            elif ax == "decomposition":
                bad = ci(X, Y | W, Z) and not ci(X, Y, Z)
            elif ax == "weak_union":
                bad = ci(X, Y | W, Z) and not ci(X, Y, W | Z)
            elif ax == "contraction":
                bad = ci(X, Y, W | Z) and ci(X, W, Z) and not ci(X, Y | W, Z)
            elif ax == "intersection":
                bad = ci(X, Y, W | Z) and ci(X, W, Y | Z) and not ci(X, Y | W, Z)
            elif ax == "composition":
                bad = ci(X, Y, Z) and ci(X, W, Z) and not ci(X, Y | W, Z)
            if bad:
                report.violations[ax].append((X, Y, Z, W))
    return report
