from __future__ import annotations

from itertools import permutations

import numpy as np
import pytest
from conftest import load_graph, random_hedg

from hedg import (
    ORDER_KINDS,
    Hedg,
    SizeLimit,
    classify,
    classify_order,
    find_perfect_elimination,
    find_pseudo_topological,
    marginalize,
    pred_hedg,
    restrict_order,
)


def relabel(g: Hedg, m: dict[str, str]) -> Hedg:
    return Hedg.build([m[v] for v in g.nodes], [(m[a], m[b]) for a, b in g.edges], [[m[v] for v in f] for f in g.hyperedges])


class TestPred:
    def test_first_node_alone(self):
        g = load_graph("fourcycle")
        p = pred_hedg(g, ["x1", "x2", "x3", "x4"], "x1")
        assert p.sorted_nodes() == ["x1"] and p.sorted_edges() == [("x1", "x1")]

    def test_last_node_is_whole_graph(self):
        g = load_graph("orderfig")
        assert pred_hedg(g, g.sorted_nodes(), "v5") == g

    def test_bad_order(self):
        with pytest.raises(ValueError):
            pred_hedg(load_graph("fourcycle"), ["x1", "x2"], "x1")


class TestClassify:
    def test_dag_topological_has_every_kind(self):
        g = Hedg.build([], [("a", "b"), ("b", "c"), ("a", "c")])
        r = classify_order(g, ["a", "b", "c"])
        assert all(r.flags[k] for k in ORDER_KINDS) and r.witnesses == {}

    def test_reverse_dag_order(self):
        g = Hedg.build([], [("a", "b")])
        r = classify_order(g, ["b", "a"])
        assert not r.topological and not r.pseudo_topological and r.assembling
        assert r.witnesses["topological"] == ("b", frozenset({"a"}))

    def test_cycle_not_topological_but_pseudo(self):
        r = classify_order(load_graph("fourcycle"), ["x1", "x2", "x3", "x4"])
        assert not r.topological and r.pseudo_topological and r.assembling
        assert not r.perfect_elimination and not r.quasi_topological

    def test_interleaved_blocks_not_assembling(self):
        g = Hedg.build(["a", "b", "c"], [("a", "b"), ("b", "a")])
        assert not classify_order(g, ["a", "c", "b"]).assembling

    def test_quasi_is_conjunction(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            g = random_hedg(rng, max_nodes=5)
            r = classify_order(g, tuple(rng.permutation(g.sorted_nodes())))
            assert r.quasi_topological == (r.pseudo_topological and r.perfect_elimination)
            assert not r.topological or r.pseudo_topological

    def test_mdag_pseudo_iff_topological(self):
        rng = np.random.default_rng(2)
        seen = 0
        while seen < 60:
            g = random_hedg(rng, max_nodes=5, loops=False)
            if not classify(g).is_mdag:
                continue
            seen += 1
            for ord in list(permutations(g.sorted_nodes()))[:24]:
                r = classify_order(g, ord)
                assert r.pseudo_topological == r.topological

    def test_relabel_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            g = random_hedg(rng, max_nodes=5)
            nodes = g.sorted_nodes()
            m = dict(zip(nodes, (f"q{i}" for i in rng.permutation(len(nodes)))))
            ord = tuple(rng.permutation(nodes))
            a = classify_order(g, ord).flags
            b = classify_order(relabel(g, m), [m[v] for v in ord]).flags
            assert a == b


class TestFind:
    def test_cycle(self):
        assert find_pseudo_topological(load_graph("fourcycle")) == ("x1", "x2", "x3", "x4")

    def test_acyclification_figure(self):
        assert find_pseudo_topological(load_graph("acyfig")) == tuple(f"v{i}" for i in range(1, 9))

    def test_always_pseudo_and_assembling(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            g = random_hedg(rng)
            r = classify_order(g, find_pseudo_topological(g))
            assert r.pseudo_topological and r.assembling

    def test_scc_inside_hyperedge_gives_quasi(self):
        g = Hedg.build([], [("a", "b"), ("b", "a"), ("b", "c")], [["a", "b"]])
        o = find_perfect_elimination(g)
        assert o is not None and classify_order(g, o).quasi_topological

    def test_perfect_elimination_is_exact_on_small_graphs(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            g = random_hedg(rng, max_nodes=4)
            found = find_perfect_elimination(g)
            exists = any(classify_order(g, o).perfect_elimination for o in permutations(g.sorted_nodes()))
            assert (found is not None) == exists
            if found is not None:
                assert classify_order(g, found).perfect_elimination

    def test_size_limit(self):
        nodes = [f"n{i:02d}" for i in range(14)]
        edges = [(nodes[i], nodes[(i + 1) % 14]) for i in range(14)]
        with pytest.raises(SizeLimit):
            find_perfect_elimination(Hedg.build(nodes, edges), max_nodes=12)


class TestRestrict:
    def test_examples(self):
        g = load_graph("fourcycle")
        assert restrict_order(g, ["x1", "x2", "x3", "x4"], ["x2"]) == ("x1", "x3", "x4")
        assert restrict_order(g, ["x1", "x2", "x3", "x4"], []) == ("x1", "x2", "x3", "x4")

    def test_pseudo_kept_under_marginalization(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            g = random_hedg(rng)
            ord = find_pseudo_topological(g)
            w = [v for v in g.sorted_nodes() if rng.random() < 0.4]
            r = classify_order(marginalize(g, w), restrict_order(g, ord, w))
            assert r.pseudo_topological and r.assembling
