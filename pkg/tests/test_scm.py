from __future__ import annotations

from itertools import product

import numpy as np
import pytest
from conftest import load_graph, load_mscm

from hedg import (
    DegenerateSample,
    DiscreteMscm,
    GaussianLinearSem,
    Hedg,
    InterventionSpec,
    MultipleSolutions,
    NoSolution,
    SingularConditioning,
    SingularSystem,
    check_compatibility,
    classify,
    cmi_estimate,
    derive_loop_solutions,
    exact_augmented_joint,
    exact_joint,
    gaussian_ci,
    gaussian_ci_defect,
    gaussian_covariance,
    intervene,
    marginal,
    marginalize_mscm,
    nonlinear_example,
    random_discrete_mscm,
    random_gaussian_sem,
    sample,
)

B = (0, 1)


def brute_joint(m: DiscreteMscm) -> dict[tuple, float]:
    """Enumerate every error outcome and every assignment; keep the unique solution."""
    nodes = m.graph.sorted_nodes()
    scopes = m.scopes()
    out: dict[tuple, float] = {}
    for es in product(*(range(len(m.errors[f])) for f in scopes)):
        weight = float(np.prod([m.errors[f][i] for f, i in zip(scopes, es)]))
        e = dict(zip(scopes, es))
        sols = []
        for xs in product(*(range(len(m.domains[v])) for v in nodes)):
            x = dict(zip(nodes, xs))
            ok = True
            for v in nodes:
                idx = tuple(x[a[1]] if a[0] == "x" else e[a[1]] for a in m.mech_axes(v))
                if m.mechanisms[v][idx] != x[v]:
                    ok = False
                    break
            if ok:
                sols.append(tuple(m.domains[v][x[v]] for v in nodes))
        assert len(sols) == 1
        out[sols[0]] = out.get(sols[0], 0.0) + weight
    return out


def self_loop(f) -> DiscreteMscm:
    g = Hedg.build(["x"], [("x", "x")])
    return DiscreteMscm.from_functions(g, {"x": B}, {("x",): [1.0]}, {"x": f})


class TestModel:
    def test_axes_layout(self):
        m = load_mscm("threecoin_mscm")
        assert m.mech_axes("X1") == [("e", frozenset({"X1", "X2", "X3"}))]
        g = Hedg.build(["a", "b", "c"], [("b", "a"), ("c", "a")], [["a", "b"]])
        m = random_discrete_mscm(np.random.default_rng(0))
        for v in m.graph.nodes:
            assert m.mechanisms[v].shape == m.mech_shape(v)
        assert [a[1] for a in DiscreteMscm.from_functions(
            g, {v: B for v in "abc"}, {("a", "b"): [1.0], ("c",): [1.0]},
            {"a": lambda p, e: p["b"], "b": lambda p, e: 0, "c": lambda p, e: 0},
        ).mech_axes("a")] == ["b", "c", frozenset({"a", "b"})]

    def test_validation(self):
        g = Hedg.build(["x"])
        with pytest.raises(ValueError):
            DiscreteMscm(g, {"x": B}, {frozenset({"x"}): [0.5, 0.6]}, {"x": np.array([0, 1])})
        with pytest.raises(ValueError):
            DiscreteMscm(g, {"x": B}, {frozenset({"x"}): [0.5, 0.5]}, {"x": np.array([0, 2])})
        with pytest.raises(ValueError):
            DiscreteMscm(g, {"x": B}, {}, {"x": np.array([0])})


class TestLoops:
    def test_unique(self):
        sols = derive_loop_solutions(self_loop(lambda p, e: 1))
        assert sols[frozenset({"x"})].table.reshape(-1).tolist() == [1]

    def test_no_solution(self):
        with pytest.raises(NoSolution):
            derive_loop_solutions(self_loop(lambda p, e: 1 - p["x"]))

    def test_multiple(self):
        with pytest.raises(MultipleSolutions) as exc:
            derive_loop_solutions(self_loop(lambda p, e: p["x"]))
        assert len(exc.value.solutions) == 2

    def test_random_models_are_compatible(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            assert check_compatibility(random_discrete_mscm(rng, max_nodes=4)) == []


class TestJoint:
    def test_point_mass(self):
        g = Hedg.build([], [("a", "b")])
        m = DiscreteMscm.from_functions(g, {"a": B, "b": B}, {("a",): [1.0], ("b",): [1.0]}, {"a": lambda p, e: 1, "b": lambda p, e: p["a"]})
        assert exact_joint(m).cells() == [((1, 1), 1.0)]

    def test_three_coin(self):
        p = exact_joint(load_mscm("threecoin_mscm"))
        assert p.cells() == [((0, 0, 0), 0.5), ((1, 1, 1), 0.5)]

    def test_augmented_marginal(self):
        m = load_mscm("threecoin_mscm")
        a = exact_augmented_joint(m)
        assert "e{X1,X2,X3}" in a.names
        assert marginal(a, m.graph.nodes).reorder(["X1", "X2", "X3"]) == exact_joint(m)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            m = random_discrete_mscm(rng, max_nodes=4, max_domain=2, max_error=2)
            p = exact_joint(m)
            want = brute_joint(m)
            got = {c: pr for c, pr in p.cells()}
            assert set(got) == {c for c, pr in want.items() if pr > 0}
            for c, pr in want.items():
                assert got.get(c, 0.0) == pytest.approx(pr, abs=1e-12)

    def test_sample_frequencies(self):
        m = load_mscm("threecoin_mscm")
        rows = sample(m, 4000, seed=3)
        assert set(rows) == {(0, 0, 0), (1, 1, 1)}
        assert abs(rows.count((0, 0, 0)) / 4000 - 0.5) < 0.05
        assert sample(m, 10, seed=4) == sample(m, 10, seed=4)


class TestIntervene:
    def test_all_nodes_point_mass(self):
        m = load_mscm("threecoin_mscm")
        p = exact_joint(intervene(m, InterventionSpec.point(m, {"X1": 1, "X2": 0, "X3": 1})))
        assert p.cells() == [((1, 0, 1), 1.0)]

    def test_cycle_becomes_acyclic(self):
        g = load_graph("fourcycle")
        m = DiscreteMscm.from_functions(
            g, {v: B for v in g.nodes}, {(v,): [0.5, 0.5] for v in g.nodes},
            {v: (lambda v: lambda p, e: e[(v,)])(v) for v in g.nodes},
        )
        mi = intervene(m, {"x2": [0.25, 0.75]})
        assert classify(mi.graph).is_dag
        assert marginal(exact_joint(mi), ["x2"]).table.tolist() == pytest.approx([0.25, 0.75])

    def test_three_coin_cuts_target(self):
        m = load_mscm("threecoin_mscm")
        mi = intervene(m, InterventionSpec.point(m, {"X1": 1}))
        assert mi.graph.sorted_hyperedges() == [("X2", "X3")]
        p = exact_joint(mi)
        assert p.cells() == [((1, 0, 0), 0.5), ((1, 1, 1), 0.5)]

    def test_bad_replacement(self):
        m = load_mscm("threecoin_mscm")
        with pytest.raises(ValueError):
            intervene(m, {"X1": [0.5, 0.6]})


class TestMarginalize:
    def test_empty_set(self):
        m = load_mscm("threecoin_mscm")
        mm = marginalize_mscm(m, [])
        assert mm.graph == m.graph and exact_joint(mm) == exact_joint(m)

    def test_chain_composes(self):
        g = Hedg.build([], [("a", "b"), ("b", "c")])
        m = DiscreteMscm.from_functions(
            g, {v: B for v in "abc"}, {("a",): [0.3, 0.7], ("b",): [0.9, 0.1], ("c",): [1.0]},
            {"a": lambda p, e: e[("a",)], "b": lambda p, e: p["a"] ^ e[("b",)], "c": lambda p, e: p["b"]},
        )
        mm = marginalize_mscm(m, ["b"])
        assert mm.graph.sorted_edges() == [("a", "c")]
        assert exact_joint(mm).allclose(marginal(exact_joint(m), ["a", "c"]))

    def test_marginal_law_matches(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            m = random_discrete_mscm(rng, max_nodes=4)
            w = [v for v in m.graph.sorted_nodes() if rng.random() < 0.5]
            rest = sorted(m.graph.nodes - set(w))
            if rest:
                assert exact_joint(marginalize_mscm(m, w)).reorder(rest).allclose(marginal(exact_joint(m), rest).reorder(rest), 1e-9)


class TestGaussian:
    def test_no_edges(self):
        g = Hedg.build(["a", "b"])
        s = GaussianLinearSem(g, np.zeros((2, 2)), np.eye(2))
        assert np.allclose(gaussian_covariance(s), np.eye(2))

    def test_self_loop_half(self):
        s = GaussianLinearSem(Hedg.build(["x"], [("x", "x")]), [[0.5]], [[1.0]])
        assert gaussian_covariance(s)[0, 0] == pytest.approx(4.0)

    def test_trek_rule_on_chain(self):
        g = Hedg.build([], [("a", "b"), ("b", "c")])
        bab, bbc = 0.7, -1.3
        b = np.zeros((3, 3))
        b[1, 0], b[2, 1] = bab, bbc
        lam = np.diag([1.0, 2.0, 0.5])
        c = gaussian_covariance(GaussianLinearSem(g, b, lam))
        assert c[2, 2] == pytest.approx(bbc**2 * bab**2 * 1.0 + bbc**2 * 2.0 + 0.5)
        assert c[0, 2] == pytest.approx(bab * bbc)
        assert c[1, 2] == pytest.approx(bbc * (bab**2 + 2.0))

    def test_matches_simulation(self):
        s = random_gaussian_sem(np.random.default_rng(6), 4)
        rng = np.random.default_rng(7)
        e = rng.multivariate_normal(np.zeros(4), s.err_cov, size=200_000)
        x = np.linalg.solve(np.eye(4) - s.coef, e.T).T
        assert np.allclose(np.cov(x.T), gaussian_covariance(s), atol=0.05 * np.abs(gaussian_covariance(s)).max())

    def test_linear_fixture_ci(self):
        from conftest import FIXTURES

        from hedg.formats import read_json, sem_from_dict

        s = sem_from_dict(read_json(FIXTURES / "linear_sem.json"))
        assert gaussian_ci_defect(s, ["X"], ["Z"], ["W", "Y"]) < 1e-10

    def test_edge_is_dependent(self):
        g = Hedg.build([], [("a", "b")])
        s = GaussianLinearSem(g, [[0, 0], [0.5, 0]], np.eye(2))
        assert not gaussian_ci(s, ["a"], ["b"])

    def test_singular(self):
        g = Hedg.build(["x"], [("x", "x")])
        with pytest.raises(SingularSystem):
            GaussianLinearSem(g, [[1.0]], [[1.0]])
        with pytest.raises(SingularConditioning):
            gaussian_ci_defect(np.ones((3, 3)), ["a"], ["c"], ["b", "a"], nodes=["a", "b", "c"])

    def test_support_checked(self):
        with pytest.raises(ValueError):
            GaussianLinearSem(Hedg.build(["a", "b"]), [[0, 0], [1, 0]], np.eye(2))
        with pytest.raises(ValueError):
            GaussianLinearSem(Hedg.build(["a", "b"]), np.zeros((2, 2)), [[1, 0.5], [0.5, 1]])


class TestNonlinear:
    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            nonlinear_example(0, n=1000)

    def test_degenerate_guard(self):
        with pytest.raises(DegenerateSample):
            nonlinear_example(0, n=10**5, guard=10.0)

    def test_recovered_errors_are_standard_normal(self):
        s = nonlinear_example(1, n=10**5)
        assert len(s["W"]) > 0.999 * 10**5
        for e in (s["Y"] - s["X"], 2 * s["W"] - s["W"] - s["Z"], s["X"] / s["W"]):
            assert abs(e.mean()) < 0.02 and abs(e.var() - 1) < 0.03
        lin = nonlinear_example(1, n=10**5, linear=True)
        for e in (lin["W"] - lin["Z"], lin["X"] - lin["W"] / 2, lin["Y"] - lin["X"], lin["Z"] - lin["Y"] / 2):
            assert abs(e.mean()) < 0.02 and abs(e.var() - 1) < 0.03

    def test_null_is_calibrated_for_independent_normals(self):
        hits = 0
        for k in range(20):
            rng = np.random.default_rng(100 + k)
            data = {c: rng.standard_normal(10**5) for c in "abc"}
            hits += cmi_estimate(data, "a", "b", ["c"], permutations=19, seed=k).exceeds(0.95)
        assert hits <= 3
