from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from hedg import (
    FiniteDist,
    Hedg,
    SepQuery,
    acyclify,
    ancestors,
    augment,
    classify_order,
    d_separated,
    find_pseudo_topological,
    marginal,
    marginalize,
    moralize,
    sigma_separated,
    umarginalize,
)
from hedg.formats import dist_from_dict, dist_to_dict, dumps, graph_from_dict, graph_to_dict


@st.composite
def hedges(draw, max_nodes: int = 6) -> Hedg:
    n = draw(st.integers(1, max_nodes))
    nodes = [f"n{i}" for i in range(n)]
    pairs = [(a, b) for a in nodes for b in nodes]
    edges = draw(st.lists(st.sampled_from(pairs), max_size=2 * n, unique=True))
    hyper = draw(st.lists(st.sets(st.sampled_from(nodes), min_size=2), max_size=2)) if n > 1 else []
    return Hedg.build(nodes, edges, [sorted(h) for h in hyper])


@st.composite
def graph_and_split(draw):
    g = draw(hedges())
    nodes = g.sorted_nodes()
    flags = draw(st.lists(st.integers(0, 2), min_size=len(nodes), max_size=len(nodes)))
    u1 = [v for v, f in zip(nodes, flags) if f == 1]
    u2 = [v for v, f in zip(nodes, flags) if f == 2]
    return g, u1, u2


@st.composite
def graph_and_query(draw):
    g = draw(hedges())
    nodes = g.sorted_nodes()
    roles = draw(st.lists(st.integers(0, 3), min_size=len(nodes), max_size=len(nodes)))
    pick = lambda r: [v for v, k in zip(nodes, roles) if k == r]
    return g, SepQuery.of(pick(1), pick(2), pick(3))


@given(graph_and_split())
@settings(max_examples=150, deadline=None)
def test_marginalization_commutes(case):
    g, u1, u2 = case
    assert marginalize(marginalize(g, u1), u2) == marginalize(marginalize(g, u2), u1) == marginalize(g, u1 + u2)


@given(graph_and_split())
@settings(max_examples=150, deadline=None)
def test_marginalization_keeps_separations(case):
    g, u1, u2 = case
    m = marginalize(g, u1)
    rest = m.sorted_nodes()
    if len(rest) >= 2:
        q = SepQuery.of(rest[0], rest[-1], [v for v in u2 if v in m.nodes and v not in (rest[0], rest[-1])])
        assert d_separated(m, q) == d_separated(g, q)
        assert sigma_separated(m, q) == sigma_separated(g, q)


@given(graph_and_query())
@settings(max_examples=200, deadline=None)
def test_sigma_implies_d(case):
    g, q = case
    if sigma_separated(g, q):
        assert d_separated(g, q)


@given(graph_and_query())
@settings(max_examples=200, deadline=None)
def test_separation_is_symmetric(case):
    g, q = case
    rev = SepQuery(q.y, q.x, q.z)
    assert d_separated(g, q) == d_separated(g, rev)
    assert sigma_separated(g, q) == sigma_separated(g, rev)


@given(hedges())
@settings(max_examples=150, deadline=None)
def test_graph_round_trip(g):
    d = graph_to_dict(g)
    assert graph_from_dict(d) == g
    assert dumps(graph_to_dict(graph_from_dict(d))) == dumps(d)


@given(hedges())
@settings(max_examples=150, deadline=None)
def test_moral_graph_of_augmentation(g):
    a = augment(g)
    assert moralize(g) == umarginalize(moralize(a), a.nodes - g.nodes)


@given(hedges())
@settings(max_examples=150, deadline=None)
def test_acyclify_idempotent_and_keeps_ancestry_blocks(g):
    a = acyclify(g)
    assert acyclify(a) == a
    for v in g.nodes:
        assert ancestors(a, [v]) <= ancestors(g, [v])


@given(hedges())
@settings(max_examples=100, deadline=None)
def test_found_order_is_pseudo_topological(g):
    r = classify_order(g, find_pseudo_topological(g))
    assert r.pseudo_topological and r.assembling


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_dist_round_trip_and_marginals(k, seed):
    rng = np.random.default_rng(seed)
    shape = tuple(int(rng.integers(1, 4)) for _ in range(k))
    p = FiniteDist(tuple((f"a{i}", tuple(range(s))) for i, s in enumerate(shape)), rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape))
    q = dist_from_dict(dist_to_dict(p))
    assert q.allclose(p, 1e-12)
    names = p.names[: k // 2 + 1]
    assert np.isclose(marginal(p, names).table.sum(), 1.0)
    assert marginal(marginal(p, names), names[:1]).allclose(marginal(p, names[:1]))
