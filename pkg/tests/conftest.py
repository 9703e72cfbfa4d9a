from __future__ import annotations

import contextlib
from itertools import combinations, permutations, product
from pathlib import Path

import numpy as np
import pytest

from hedg import Hedg
from hedg.formats import dist_from_dict, graph_from_dict, mscm_from_dict, read_json

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

RESULTS: list[str] = []


def load_graph(name: str) -> Hedg:
    return graph_from_dict(read_json(FIXTURES / f"{name}.json"))


def load_dist(name: str):
    return dist_from_dict(read_json(FIXTURES / f"{name}.json"))


def load_mscm(name: str):
    return mscm_from_dict(read_json(FIXTURES / f"{name}.json"))


@contextlib.contextmanager
def criterion(label: str):
    """Record a PASS/FAIL line for an acceptance criterion."""
    try:
        yield
    except BaseException:
        line = f"FAIL  {label}"
        RESULTS.append(line)
        print(line)
        raise
    line = f"PASS  {label}"
    RESULTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)


def random_hedg(rng: np.random.Generator, max_nodes: int = 7, edge_prob: float | None = None, max_hyper: int = 2, loops: bool = True) -> Hedg:
    n = int(rng.integers(1, max_nodes + 1))
    nodes = [f"v{i}" for i in range(1, n + 1)]
    p = edge_prob if edge_prob is not None else float(rng.uniform(0.1, 0.45))
    edges = [(a, b) for a in nodes for b in nodes if (a != b or loops and rng.random() < 0.3) and rng.random() < p]
    hyper = []
    for _ in range(int(rng.integers(0, max_hyper + 1))):
        if n >= 2:
            k = int(rng.integers(2, min(n, 4) + 1))
            hyper.append(list(rng.choice(nodes, size=k, replace=False)))
    return Hedg.build(nodes, edges, hyper)


def small_hedges() -> list[Hedg]:
    """Every HEDG on at most three labelled nodes (self-loops included) and
    every four-node HEDG without self-loops and with at most one multi-node
    hyperedge, up to isomorphism."""
    out: list[Hedg] = []
    for n in range(1, 4):
        nodes = [f"v{i}" for i in range(1, n + 1)]
        pairs = list(product(nodes, nodes))
        subsets = [frozenset(c) for k in range(2, n + 1) for c in combinations(nodes, k)]
        hsets = {frozenset()} | {frozenset(h) for k in range(1, len(subsets) + 1) for h in combinations(subsets, k)}
        hsets = {frozenset(s for s in h if not any(s < t for t in h)) for h in hsets}
        for bits in product((0, 1), repeat=len(pairs)):
            edges = [e for e, b in zip(pairs, bits) if b]
            for h in sorted(hsets, key=lambda h: sorted(map(sorted, h))):
                out.append(Hedg.build(nodes, edges, h))
    nodes = ["v1", "v2", "v3", "v4"]
    pairs = [(a, b) for a in nodes for b in nodes if a != b]
    hyper_opts = [()] + [(c,) for k in range(2, 5) for c in combinations(nodes, k)]
    perms = list(permutations(range(4)))
    seen = set()
    for bits in product((0, 1), repeat=len(pairs)):
        edges = [e for e, b in zip(pairs, bits) if b]
        eidx = [(int(a[1]) - 1, int(b[1]) - 1) for a, b in edges]
        for h in hyper_opts:
            hidx = [tuple(int(v[1]) - 1 for v in f) for f in h]
            key = min(
                (tuple(sorted((p[a], p[b]) for a, b in eidx)), tuple(sorted(tuple(sorted(p[i] for i in f)) for f in hidx)))
                for p in perms
            )
            if key in seen:
                continue
            seen.add(key)
            out.append(Hedg.build(nodes, edges, [list(f) for f in h]))
    return out


@pytest.fixture(scope="session")
def small_population() -> list[Hedg]:
    return small_hedges()


@pytest.fixture(scope="session")
def random_population() -> list[Hedg]:
    rng = np.random.default_rng(20240501)
    return [random_hedg(rng) for _ in range(500)]
