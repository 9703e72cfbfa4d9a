"""JSON file formats and DOT export.

Every ``dump_*`` function emits canonical JSON (sorted members, two-space
indent, trailing newline) so that ``dump(load(dump(x))) == dump(x)``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .core import Hedg
from .dist import FiniteDist
from .scm import DiscreteMscm, GaussianLinearSem
from .transform import UGraph, latent_label

__all__ = [
    "FormatError",
    "graph_to_dict",
    "graph_from_dict",
    "ugraph_to_dict",
    "dist_to_dict",
    "dist_from_dict",
    "mscm_to_dict",
    "mscm_from_dict",
    "sem_to_dict",
    "sem_from_dict",
    "dumps",
    "read_json",
    "export_dot",
]


class FormatError(ValueError):
    pass


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def _labels(xs: Any, what: str) -> list[str]:
    if not isinstance(xs, list) or not all(isinstance(x, str) and x for x in xs):
        raise FormatError(f"{what} must be a list of non-empty strings")
    return xs


def graph_to_dict(g: Hedg) -> dict:
    return {
        "nodes": g.sorted_nodes(),
        "edges": [list(e) for e in g.sorted_edges()],
        "hyperedges": [list(f) for f in g.sorted_hyperedges()],
    }


def graph_from_dict(d: Mapping) -> Hedg:
    if not isinstance(d, Mapping) or "nodes" not in d:
        raise FormatError("graph needs a 'nodes' list")
    nodes = _labels(d["nodes"], "nodes")
    known = set(nodes)
    edges = []
    for e in d.get("edges", []):
        e = _labels(e, "edge")
        if len(e) != 2:
            raise FormatError(f"edge {e} must have two endpoints")
        edges.append(tuple(e))
    hyper = [_labels(f, "hyperedge") for f in d.get("hyperedges", [])]
    bad = {v for e in edges for v in e} | {v for f in hyper for v in f}
    bad -= known
    if bad:
        raise FormatError(f"unknown node label(s): {', '.join(sorted(bad))}")
    return Hedg(frozenset(nodes), frozenset(edges), frozenset(frozenset(f) for f in hyper))


def ugraph_to_dict(ug: UGraph) -> dict:
    return {"nodes": sorted(ug.nodes), "edges": [list(e) for e in ug.sorted_edges()]}


def _prob(x: Any) -> float:
    if isinstance(x, str):
        try:
            return float(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"bad probability {x!r}") from None
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    raise FormatError(f"bad probability {x!r}")


def dist_to_dict(p: FiniteDist) -> dict:
    return {
        "variables": [{"name": n, "domain": list(d)} for n, d in p.variables],
        "cells": [[list(a), pr] for a, pr in p.cells()],
    }


def dist_from_dict(d: Mapping) -> FiniteDist:
    try:
        variables = [(v["name"], tuple(v["domain"])) for v in d["variables"]]
        cells = [(tuple(a), _prob(pr)) for a, pr in d["cells"]]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed distribution file ({exc})") from None
    return FiniteDist.from_cells(variables, cells)


def mscm_to_dict(m: DiscreteMscm) -> dict:
    mechs = {}
    for v in m.graph.sorted_nodes():
        axes = [a[1] if a[0] == "x" else latent_label(a[1]) for a in m.mech_axes(v)]
        dom = np.array(m.domains[v], dtype=object)
        mechs[v] = {"axes": axes, "table": dom[m.mechanisms[v]].tolist()}
    return {
        "graph": graph_to_dict(m.graph),
        "domains": {v: list(m.domains[v]) for v in m.graph.sorted_nodes()},
        "errors": [{"scope": sorted(f), "probs": [float(x) for x in m.errors[f]]} for f in m.scopes()],
        "mechanisms": mechs,
    }


def mscm_from_dict(d: Mapping) -> DiscreteMscm:
    try:
        g = graph_from_dict(d["graph"])
        domains = {v: tuple(vals) for v, vals in d["domains"].items()}
        errors = {frozenset(e["scope"]): np.array([_prob(x) for x in e["probs"]]) for e in d["errors"]}
        raw = d["mechanisms"]
    except (KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"malformed model file ({exc})") from None
    proto = object.__new__(DiscreteMscm)
    object.__setattr__(proto, "graph", g)
    object.__setattr__(proto, "domains", domains)
    object.__setattr__(proto, "errors", errors)
    mechs = {}
    for v in g.sorted_nodes():
        if v not in raw or v not in domains:
            raise FormatError(f"missing domain or mechanism for {v}")
        want = [a[1] if a[0] == "x" else latent_label(a[1]) for a in proto.mech_axes(v)]
        if list(raw[v].get("axes", [])) != want:
            raise FormatError(f"mechanism axes for {v} must be {want}")
        index = {val: i for i, val in enumerate(domains[v])}
        try:
            table = np.vectorize(index.__getitem__, otypes=[np.int64])(np.array(raw[v]["table"], dtype=object))
        except KeyError as exc:
            raise FormatError(f"mechanism for {v} outputs {exc.args[0]!r}, not in its domain") from None
        mechs[v] = table.reshape(np.shape(np.array(raw[v]["table"], dtype=object)))
    return DiscreteMscm(g, domains, errors, mechs)


def sem_to_dict(s: GaussianLinearSem) -> dict:
    nodes = s.nodes
    coef = [[nodes[j], nodes[i], float(s.coef[i, j])] for i in range(len(nodes)) for j in range(len(nodes)) if s.coef[i, j] != 0]
    cov = [[nodes[i], nodes[j], float(s.err_cov[i, j])] for i in range(len(nodes)) for j in range(i, len(nodes)) if s.err_cov[i, j] != 0]
    return {"graph": graph_to_dict(s.graph), "coef": sorted(coef), "err_cov": sorted(cov)}


def sem_from_dict(d: Mapping) -> GaussianLinearSem:
    try:
        g = graph_from_dict(d["graph"])
        pos = {v: i for i, v in enumerate(g.sorted_nodes())}
        n = len(pos)
        b = np.zeros((n, n))
        for src, dst, w in d.get("coef", []):
            b[pos[dst], pos[src]] = float(w)
        lam = np.zeros((n, n))
        for v, w, c in d.get("err_cov", []):
            lam[pos[v], pos[w]] = lam[pos[w], pos[v]] = float(c)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed SEM file ({exc})") from None
    return GaussianLinearSem(g, b, lam)


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(g: Hedg | UGraph, name: str = "G") -> str:
    """Deterministic DOT text.

    Each hyperedge with two or more members becomes a point-shaped node with
    arrows to its members; undirected graphs become ``graph`` documents.
    """
    if isinstance(g, UGraph):
        lines = [f"graph {_q(name)} {{"]
        lines += [f"  {_q(v)};" for v in sorted(g.nodes)]
        lines += [f"  {_q(a)} -- {_q(b)};" for a, b in g.sorted_edges()]
        return "\n".join(lines + ["}"]) + "\n"
    lines = [f"digraph {_q(name)} {{"]
    lines += [f"  {_q(v)};" for v in g.sorted_nodes()]
    lines += [f"  {_q(a)} -> {_q(b)};" for a, b in g.sorted_edges()]
    for f in g.sorted_hyperedges():
        h = latent_label(f)
        lines.append(f'  {_q(h)} [shape=point, label="", color=red];')
        lines += [f"  {_q(h)} -> {_q(v)} [color=red];" for v in f]
    return "\n".join(lines + ["}"]) + "\n"
