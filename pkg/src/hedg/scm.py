"""Modular structural causal models.

* :class:`DiscreteMscm` -- finite-domain models over a HEDG with exact loop
  solving, joint distributions, stochastic interventions and
  marginalization by substitution.
* :class:`GaussianLinearSem` -- linear cyclic models with Gaussian errors and
  closed-form covariances.
* A Monte-Carlo harness for a nonlinear cyclic model whose joint law breaks
  the d-separation Markov property.

Discrete values are handled internally as indices into each node's domain.
Mechanism tables are integer arrays whose axes are the sorted parents of the
node followed by the error scopes (maximal hyperedges) containing it.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .core import Hedg, HedgError, UnknownNode, loop_set, node_set, scc_partition
from .dist import FiniteDist
from .orders import find_pseudo_topological
from .transform import intervene_graph, latent_label, marginalize

__all__ = [
    "NoSolution",
    "MultipleSolutions",
    "SingularSystem",
    "SingularConditioning",
    "DegenerateSample",
    "DiscreteMscm",
    "LoopSolution",
    "InterventionSpec",
    "derive_loop_solutions",
    "check_compatibility",
    "exact_joint",
    "exact_augmented_joint",
    "intervene",
    "marginalize_mscm",
    "random_discrete_mscm",
    "sample",
    "GaussianLinearSem",
    "gaussian_covariance",
    "gaussian_ci_defect",
    "gaussian_ci",
    "random_gaussian_sem",
    "nonlinear_example",
    "CmiResult",
    "cmi_estimate",
]

Axis = tuple  # ("x", node) or ("e", scope)


class NoSolution(HedgError):
    """A loop has an input with no solution."""

    def __init__(self, loop: frozenset[str], inputs: dict) -> None:
        super().__init__(f"loop {sorted(loop)} has no solution for input {inputs}")
        self.loop, self.inputs = loop, inputs


class MultipleSolutions(HedgError):
    """A loop has an input with more than one solution."""

    def __init__(self, loop: frozenset[str], inputs: dict, solutions: list[dict]) -> None:
        super().__init__(f"loop {sorted(loop)} has several solutions for input {inputs}: {solutions}")
        self.loop, self.inputs, self.solutions = loop, inputs, solutions


class SingularSystem(HedgError):
    pass


class SingularConditioning(HedgError):
    pass


class DegenerateSample(HedgError):
    pass


def _scope_key(f: frozenset[str]) -> tuple[str, ...]:
    return tuple(sorted(f))


@dataclass(frozen=True, eq=False)
class DiscreteMscm:
    """Finite structural causal model.

    Parameters
    ----------
    graph
        The underlying HEDG.
    domains
        Finite value tuple per node.
    errors
        Probability vector per maximal hyperedge (singletons included).
    mechanisms
        Integer table per node mapping parent value indices and error
        indices to the index of the node's value.
    """

    graph: Hedg
    domains: Mapping[str, tuple]
    errors: Mapping[frozenset, np.ndarray]
    mechanisms: Mapping[str, np.ndarray]

    def __post_init__(self) -> None:
        g = self.graph
        domains = {v: tuple(self.domains[v]) for v in g.sorted_nodes()} if set(self.domains) >= g.nodes else None
        if domains is None or set(self.domains) != g.nodes:
            raise ValueError("a domain is needed for every node and only for nodes")
        for v, d in domains.items():
            if not d:
                raise ValueError(f"empty domain for {v}")
        scopes = g.maximal_hyperedges()
        errors = {}
        if {frozenset(k) for k in self.errors} != set(scopes):
            raise ValueError("error spaces must be given for exactly the maximal hyperedges")
        for k, pr in self.errors.items():
            pr = np.asarray(pr, dtype=float)
            if pr.ndim != 1 or pr.size == 0 or np.any(pr < 0) or abs(pr.sum() - 1) > 1e-9:
                raise ValueError(f"error table for {sorted(k)} is not a distribution")
            pr = pr / pr.sum()
            pr.setflags(write=False)
            errors[frozenset(k)] = pr
        object.__setattr__(self, "domains", domains)
        object.__setattr__(self, "errors", errors)
        mechs = {}
        for v in g.sorted_nodes():
            if v not in self.mechanisms:
                raise ValueError(f"missing mechanism for {v}")
            t = np.asarray(self.mechanisms[v])
            if t.shape != self.mech_shape(v):
                raise ValueError(f"mechanism for {v} has shape {t.shape}, expected {self.mech_shape(v)}")
            if not np.issubdtype(t.dtype, np.integer) or t.min(initial=0) < 0 or t.max(initial=0) >= len(domains[v]):
                raise ValueError(f"mechanism for {v} must map into value indices of its domain")
            t = t.astype(np.int64)
            t.setflags(write=False)
            mechs[v] = t
        if set(self.mechanisms) != g.nodes:
            raise ValueError("mechanisms given for unknown nodes")
        object.__setattr__(self, "mechanisms", mechs)

    def scopes(self) -> list[frozenset[str]]:
        return self.graph.maximal_hyperedges()

    def error_scopes(self, v: str) -> list[frozenset[str]]:
        return [f for f in self.scopes() if v in f]

    def mech_axes(self, v: str) -> list[Axis]:
        return [("x", u) for u in sorted(self.graph.pa[v])] + [("e", f) for f in self.error_scopes(v)]

    def dim(self, axis: Axis) -> int:
        return len(self.domains[axis[1]]) if axis[0] == "x" else len(self.errors[axis[1]])

    def mech_shape(self, v: str) -> tuple[int, ...]:
        return tuple(self.dim(a) for a in self.mech_axes(v))

    @classmethod
    def from_functions(
        cls,
        graph: Hedg,
        domains: Mapping[str, Sequence],
        errors: Mapping[Iterable[str], Sequence[float]] | None = None,
        functions: Mapping[str, object] | None = None,
        error_values: Mapping[Iterable[str], Sequence] | None = None,
    ) -> "DiscreteMscm":
        """Tabulate Python callables ``f(parents: dict, errors: dict) -> value``.

        ``errors`` maps each maximal hyperedge to a probability vector;
        ``error_values`` optionally names the error outcomes (defaults to
        ``0, 1, ...``).  The ``errors`` dict passed to ``f`` is keyed by the
        sorted tuple of the hyperedge's members.
        """
        errors = {frozenset(k): np.asarray(v, float) for k, v in (errors or {}).items()}
        ev = {frozenset(k): tuple(v) for k, v in (error_values or {}).items()}
        domains = {v: tuple(d) for v, d in domains.items()}
        proto = object.__new__(cls)
        object.__setattr__(proto, "graph", graph)
        object.__setattr__(proto, "domains", domains)
        object.__setattr__(proto, "errors", errors)
        mechs = {}
        for v in graph.sorted_nodes():
            axes = proto.mech_axes(v)
            shape = tuple(proto.dim(a) for a in axes)
            table = np.zeros(shape, dtype=np.int64)
            for pos in product(*(range(s) for s in shape)):
                pa, er = {}, {}
                for a, i in zip(axes, pos):
                    if a[0] == "x":
                        pa[a[1]] = domains[a[1]][i]
                    else:
                        er[_scope_key(a[1])] = ev.get(a[1], range(len(errors[a[1]])))[i]
                table[pos] = domains[v].index(functions[v](pa, er))
            mechs[v] = table
        return cls(graph, domains, errors, mechs)

    def variables(self) -> tuple[tuple[str, tuple], ...]:
        return tuple((v, self.domains[v]) for v in self.graph.sorted_nodes())


def _grid(axes: Sequence[Axis], dims: Sequence[int]) -> dict[Axis, np.ndarray]:
    env = {}
    for i, (a, d) in enumerate(zip(axes, dims)):
        shape = [1] * len(axes)
        shape[i] = d
        env[a] = np.arange(d).reshape(shape)
    return env


def _eval(table: np.ndarray, axes: Sequence[Axis], env: Mapping[Axis, np.ndarray]) -> np.ndarray:
    if not axes:
        return np.asarray(table)
    return table[tuple(env[a] for a in axes)]


@dataclass(frozen=True)
class LoopSolution:
    """Unique solution map of one loop.

    ``table[inputs..., errors..., j]`` is the value index of ``nodes[j]``.
    """

    nodes: tuple[str, ...]
    inputs: tuple[str, ...]
    error_scopes: tuple[frozenset, ...]
    table: np.ndarray

    @property
    def in_axes(self) -> list[Axis]:
        return [("x", u) for u in self.inputs] + [("e", f) for f in self.error_scopes]


def _solve(m: DiscreteMscm, loop: Iterable[str]) -> LoopSolution:
    g = m.graph
    s = sorted(loop)
    sset = frozenset(s)
    inputs = sorted(frozenset().union(*(g.pa[v] for v in s)) - sset)
    scopes = [f for f in m.scopes() if f & sset]
    in_axes = [("x", u) for u in inputs] + [("e", f) for f in scopes]
    out_axes = [("x", v) for v in s]
    axes = in_axes + out_axes
    dims = [m.dim(a) for a in axes]
    env = _grid(axes, dims)
    ok = np.ones([1] * len(axes), dtype=bool)
    for v in s:
        ok = ok & (_eval(m.mechanisms[v], m.mech_axes(v), env) == env[("x", v)])
    ok = np.broadcast_to(ok, dims)
    n_in = int(np.prod(dims[: len(in_axes)]))
    in_dims = dims[: len(in_axes)]
    out_dims = dims[len(in_axes) :]
    flat = ok.reshape(n_in, -1)
    counts = flat.sum(axis=1)

    def describe(k: int) -> dict:
        pos = np.unravel_index(k, in_dims) if in_dims else ()
        out = {}
        for a, i in zip(in_axes, pos):
            out[a[1] if a[0] == "x" else latent_label(a[1])] = m.domains[a[1]][i] if a[0] == "x" else int(i)
        return out

    def sol(j: int) -> dict:
        pos = np.unravel_index(j, out_dims)
        return {v: m.domains[v][i] for v, i in zip(s, pos)}

    if np.any(counts == 0):
        k = int(np.argmax(counts == 0))
        raise NoSolution(sset, describe(k))
    if np.any(counts > 1):
        k = int(np.argmax(counts > 1))
        js = np.flatnonzero(flat[k])[:2]
        raise MultipleSolutions(sset, describe(k), [sol(int(j)) for j in js])
    idx = flat.argmax(axis=1)
    cols = np.stack(np.unravel_index(idx, out_dims), axis=-1) if out_dims else np.zeros((n_in, 0), int)
    table = cols.reshape(tuple(in_dims) + (len(s),)).astype(np.int64)
    table.setflags(write=False)
    return LoopSolution(tuple(s), tuple(inputs), tuple(scopes), table)


def derive_loop_solutions(m: DiscreteMscm) -> dict[frozenset[str], LoopSolution]:
    """Unique solution maps for every loop, found by exhaustive enumeration.

    Solvability is demanded for every input combination, not only almost
    surely.  Raises :class:`NoSolution` or :class:`MultipleSolutions`.
    """
    return {s: _solve(m, s) for s in loop_set(m.graph)}


def check_compatibility(m: DiscreteMscm, sols: Mapping[frozenset[str], LoopSolution] | None = None) -> list[tuple]:
    """Pairs of nested loops whose solutions disagree (empty when compatible)."""
    sols = sols if sols is not None else derive_loop_solutions(m)
    bad = []
    for big, sb in sols.items():
        for small, ss in sols.items():
            if small >= big or not small < big:
                continue
            axes = sb.in_axes
            dims = [m.dim(a) for a in axes]
            env = _grid(axes, dims)
            vals = _eval(sb.table, axes, env)
            for j, v in enumerate(sb.nodes):
                env[("x", v)] = vals[..., j]
            got = _eval(ss.table, ss.in_axes, env)
            want = np.stack([env[("x", v)] for v in ss.nodes], axis=-1)
            if not np.array_equal(np.broadcast_to(got, want.shape), want):
                bad.append((big, small))
    return bad


def _propagate(m: DiscreteMscm) -> tuple[dict[Axis, np.ndarray], np.ndarray]:
    """Values of every node for every error configuration, with probabilities."""
    sols = derive_loop_solutions(m)
    scopes = m.scopes()
    sizes = [len(m.errors[f]) for f in scopes]
    n_cfg = int(np.prod(sizes)) if sizes else 1
    idx = np.unravel_index(np.arange(n_cfg), sizes) if sizes else ()
    env: dict[Axis, np.ndarray] = {("e", f): i for f, i in zip(scopes, idx)}
    probs = np.ones(n_cfg)
    for f, i in zip(scopes, idx):
        probs = probs * m.errors[f][i]
    order = find_pseudo_topological(m.graph)
    done: set[str] = set()
    for v in order:
        if v in done:
            continue
        block = m.graph._scc_of[v]
        sol = sols[block]
        vals = sol.table[tuple(env[a] for a in sol.in_axes)] if sol.in_axes else np.broadcast_to(sol.table, (n_cfg, len(block)))
        for j, u in enumerate(sol.nodes):
            env[("x", u)] = np.broadcast_to(vals[..., j], (n_cfg,))
        done |= block
    return env, probs


def exact_joint(m: DiscreteMscm) -> FiniteDist:
    """Exact observed joint, by pushing every error configuration through the SCC solutions."""
    env, probs = _propagate(m)
    nodes = m.graph.sorted_nodes()
    if not nodes:
        return FiniteDist((), np.ones(()))
    joint = np.zeros(tuple(len(m.domains[v]) for v in nodes))
    np.add.at(joint, tuple(env[("x", v)] for v in nodes), probs)
    return FiniteDist(m.variables(), joint)


def exact_augmented_joint(m: DiscreteMscm) -> FiniteDist:
    """Joint of observed nodes and one latent variable per maximal hyperedge."""
    env, probs = _propagate(m)
    nodes = m.graph.sorted_nodes()
    scopes = m.scopes()
    axes = [("x", v) for v in nodes] + [("e", f) for f in scopes]
    if not axes:
        return FiniteDist((), np.ones(()))
    joint = np.zeros(tuple(m.dim(a) for a in axes))
    np.add.at(joint, tuple(env[a] for a in axes), probs)
    variables = list(m.variables()) + [(latent_label(f), tuple(range(len(m.errors[f])))) for f in scopes]
    return FiniteDist(tuple(variables), joint)


def sample(m: DiscreteMscm, n: int, seed: int | None = None) -> list[tuple]:
    """Draw ``n`` observed rows (values in sorted node order) from the exact joint."""
    p = exact_joint(m)
    rng = np.random.default_rng(seed)
    flat = p.table.ravel()
    picks = rng.choice(flat.size, size=n, p=flat)
    nodes = m.graph.sorted_nodes()
    pos = np.unravel_index(picks, p.table.shape)
    return [tuple(m.domains[v][pos[j][k]] for j, v in enumerate(nodes)) for k in range(n)]


def _rebuild(
    m: DiscreteMscm,
    g2: Hedg,
    phi: Mapping[frozenset, frozenset],
    fixed: Mapping[str, np.ndarray] | None = None,
    substitute: tuple[str, np.ndarray, list[Axis]] | None = None,
) -> DiscreteMscm:
    """Re-bundle errors along ``phi`` and re-tabulate mechanisms on ``g2``.

    ``fixed`` gives intervention targets with their replacement distribution
    (identity mechanism on a fresh singleton error).  ``substitute`` names a
    removed node with the solution table and input axes used in its place.
    """
    fixed = fixed or {}
    scopes2 = g2.maximal_hyperedges()
    bundles: dict[frozenset, list[frozenset]] = {f2: [] for f2 in scopes2}
    for f, f2 in phi.items():
        bundles[f2].append(f)
    for f2 in bundles:
        bundles[f2].sort(key=_scope_key)
    errors2: dict[frozenset, np.ndarray] = {}
    for f2 in scopes2:
        if len(f2) == 1 and next(iter(f2)) in fixed:
            errors2[f2] = np.asarray(fixed[next(iter(f2))], float)
            continue
        if not bundles[f2]:
            raise AssertionError(f"no error assigned to {sorted(f2)}")
        pr = np.ones(1)
        for f in bundles[f2]:
            pr = np.multiply.outer(pr, m.errors[f]).ravel()
        errors2[f2] = pr

    domains2 = {v: m.domains[v] for v in g2.nodes}
    proto = object.__new__(DiscreteMscm)
    object.__setattr__(proto, "graph", g2)
    object.__setattr__(proto, "domains", domains2)
    object.__setattr__(proto, "errors", errors2)

    mechs: dict[str, np.ndarray] = {}
    for v in g2.sorted_nodes():
        axes = proto.mech_axes(v)
        dims = [proto.dim(a) for a in axes]
        if v in fixed:
            mechs[v] = np.arange(len(m.domains[v]), dtype=np.int64)
            continue
        env = _grid(axes, dims)
        for a in axes:
            if a[0] == "e" and a[1] in bundles and bundles[a[1]]:
                sizes = [len(m.errors[f]) for f in bundles[a[1]]]
                for f, i in zip(bundles[a[1]], np.unravel_index(env[a], sizes)):
                    env[("e", f)] = i
        if substitute is not None and substitute[0] in m.graph.pa[v]:
            u, table, in_axes = substitute
            env[("x", u)] = _eval(table, in_axes, env)
        vals = _eval(m.mechanisms[v], m.mech_axes(v), env)
        mechs[v] = np.array(np.broadcast_to(vals, dims), dtype=np.int64)
    return DiscreteMscm(g2, domains2, errors2, mechs)


def _pick(scopes2: Sequence[frozenset], need: frozenset) -> frozenset:
    for f2 in scopes2:
        if need <= f2:
            return f2
    raise AssertionError(f"no hyperedge contains {sorted(need)}")


class InterventionSpec(NamedTuple):
    """Targets with replacement distributions over their domains (in domain order)."""

    targets: Mapping[str, Sequence[float]]

    @classmethod
    def point(cls, m: DiscreteMscm, values: Mapping[str, object]) -> "InterventionSpec":
        out = {}
        for v, val in values.items():
            if v not in m.domains:
                raise UnknownNode(f"unknown node: {v}")
            dist = np.zeros(len(m.domains[v]))
            dist[m.domains[v].index(val)] = 1.0
            out[v] = dist
        return cls(out)


def intervene(m: DiscreteMscm, spec: InterventionSpec | Mapping[str, Sequence[float]]) -> DiscreteMscm:
    """Stochastic intervention.

    Edges into targets are cut, targets leave every hyperedge and receive a
    fresh singleton error distributed as the replacement law, copied by an
    identity mechanism.  Remaining errors are re-bundled onto the first
    (canonically ordered) maximal hyperedge containing their surviving scope.
    """
    targets = spec.targets if isinstance(spec, InterventionSpec) else spec
    t = m.graph.check(targets)
    fixed = {}
    for v in t:
        pr = np.asarray(targets[v], float)
        if pr.shape != (len(m.domains[v]),) or np.any(pr < 0) or abs(pr.sum() - 1) > 1e-9:
            raise ValueError(f"replacement distribution for {v} must be a probability vector over its domain")
        fixed[v] = pr
    g2 = intervene_graph(m.graph, t)
    scopes2 = [f for f in g2.maximal_hyperedges() if not (len(f) == 1 and next(iter(f)) in t)]
    phi = {f: _pick(scopes2, f - t) for f in m.scopes() if f - t}
    return _rebuild(m, g2, phi, fixed=fixed)


def _marginalize_one(m: DiscreteMscm, u: str) -> DiscreteMscm:
    g = m.graph
    g2 = marginalize(g, [u])
    scopes2 = g2.maximal_hyperedges()
    kids = g.ch[u] - {u}
    phi = {}
    for f in m.scopes():
        need = (f - {u}) | kids if u in f else f
        if scopes2:
            phi[f] = _pick(scopes2, need)
    if u in g.pa[u]:
        sol = _solve(m, [u])
        table = sol.table[..., 0]
        in_axes = sol.in_axes
    else:
        table = m.mechanisms[u]
        in_axes = m.mech_axes(u)
    return _rebuild(m, g2, phi, substitute=(u, table, in_axes))


def marginalize_mscm(m: DiscreteMscm, w: Iterable[str]) -> DiscreteMscm:
    """Remove the nodes ``w`` one at a time by substitution.

    A removed node is replaced by its mechanism, or by its single-node loop
    solution if it has a self-loop.  The model must be loop-wise uniquely
    solvable.
    """
    w = m.graph.check(w)
    derive_loop_solutions(m)
    for u in sorted(w):
        m = _marginalize_one(m, u)
    return m


def random_discrete_mscm(
    rng: np.random.Generator,
    max_nodes: int = 5,
    max_domain: int = 3,
    max_error: int = 3,
    edge_prob: float = 0.35,
    max_hyperedges: int = 2,
    max_tries: int = 10_000,
) -> DiscreteMscm:
    """Random model, rejection-sampled until every loop is uniquely solvable.

    Tables of nodes on a cycle are drawn so that, for each error value, the
    node ignores its in-cycle parents with some probability; this keeps the
    acceptance rate workable while still producing genuine feedback.
    """
    for _ in range(max_tries):
        n = int(rng.integers(1, max_nodes + 1))
        nodes = [f"v{i}" for i in range(1, n + 1)]
        edges = [(a, b) for a in nodes for b in nodes if a != b and rng.random() < edge_prob]
        hyper = []
        for _ in range(int(rng.integers(0, max_hyperedges + 1))):
            if n >= 2:
                k = int(rng.integers(2, n + 1))
                hyper.append(list(rng.choice(nodes, size=k, replace=False)))
        g = Hedg.build(nodes, edges, hyper)
        domains = {v: tuple(range(int(rng.integers(2, max_domain + 1)))) for v in nodes}
        errors = {}
        for f in g.maximal_hyperedges():
            k = int(rng.integers(1, max_error + 1))
            pr = rng.dirichlet(np.ones(k))
            errors[f] = pr
        proto = object.__new__(DiscreteMscm)
        object.__setattr__(proto, "graph", g)
        object.__setattr__(proto, "domains", domains)
        object.__setattr__(proto, "errors", errors)
        sc = g._scc_of
        mechs = {}
        for v in nodes:
            axes = proto.mech_axes(v)
            dims = [proto.dim(a) for a in axes]
            table = rng.integers(0, len(domains[v]), size=dims)
            cyc = [i for i, a in enumerate(axes) if a[0] == "x" and a[1] in sc[v]]
            if cyc and rng.random() < 0.7:
                # ignore in-cycle parents on a random subset of slices
                mask_shape = [1 if i in cyc else d for i, d in enumerate(dims)]
                mask = rng.random(mask_shape) < 0.75
                ref = table
                for i in cyc:
                    ref = np.take(ref, [0], axis=i)
                table = np.where(mask, np.broadcast_to(ref, dims), table)
            mechs[v] = table.astype(np.int64)
        m = DiscreteMscm(g, domains, errors, mechs)
        try:
            derive_loop_solutions(m)
        except (NoSolution, MultipleSolutions):
            continue
        return m
    raise RuntimeError("no uniquely solvable model found")


# Gaussian linear models


@dataclass(frozen=True, eq=False)
class GaussianLinearSem:
    """``X = B X + E`` with ``Cov(E) = Lambda``; arrays follow sorted node order.

    ``coef[i, j]`` is the weight of node ``j`` in the equation of node ``i``
    and may be non-zero only for an edge ``j -> i``.  ``err_cov`` may be
    non-zero off the diagonal only for pairs inside a hyperedge.
    """

    graph: Hedg
    coef: np.ndarray
    err_cov: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.graph.nodes)
        b = np.asarray(self.coef, float)
        lam = np.asarray(self.err_cov, float)
        if b.shape != (n, n) or lam.shape != (n, n):
            raise ValueError("coefficient and covariance matrices must be n x n")
        nodes = self.graph.sorted_nodes()
        for i, v in enumerate(nodes):
            for j, w in enumerate(nodes):
                if b[i, j] != 0 and (w, v) not in self.graph.edges:
                    raise ValueError(f"coefficient for {w}->{v} without that edge")
                if i != j and lam[i, j] != 0 and not self.graph.in_h({v, w}):
                    raise ValueError(f"error covariance between {v} and {w} without a shared hyperedge")
        if not np.allclose(lam, lam.T):
            raise ValueError("error covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(lam)) < -1e-12:
            raise ValueError("error covariance must be positive semidefinite")
        if abs(np.linalg.det(np.eye(n) - b)) < 1e-12:
            raise SingularSystem("I - B is singular")
        object.__setattr__(self, "coef", b)
        object.__setattr__(self, "err_cov", lam)

    @property
    def nodes(self) -> list[str]:
        return self.graph.sorted_nodes()


def gaussian_covariance(s: GaussianLinearSem) -> np.ndarray:
    """``(I - B)^-1 Lambda (I - B)^-T``."""
    n = len(s.nodes)
    a = np.eye(n) - s.coef
    if abs(np.linalg.det(a)) < 1e-12:
        raise SingularSystem("I - B is singular")
    inv = np.linalg.inv(a)
    cov = inv @ s.err_cov @ inv.T
    return (cov + cov.T) / 2


def gaussian_ci_defect(s: GaussianLinearSem | np.ndarray, x, y, z=(), nodes: Sequence[str] | None = None) -> float:
    """Largest entry of the conditional cross-covariance of ``x`` and ``y`` given ``z``."""
    if isinstance(s, GaussianLinearSem):
        cov, nodes = gaussian_covariance(s), s.nodes
    else:
        cov = np.asarray(s)
    pos = {v: i for i, v in enumerate(nodes)}
    for v in node_set(x) | node_set(y) | node_set(z):
        if v not in pos:
            raise UnknownNode(f"unknown node: {v}")
    xi = [pos[v] for v in sorted(node_set(x))]
    yi = [pos[v] for v in sorted(node_set(y))]
    zi = [pos[v] for v in sorted(node_set(z))]
    sxy = cov[np.ix_(xi, yi)]
    if zi:
        szz = cov[np.ix_(zi, zi)]
        if np.linalg.cond(szz) > 1e12:
            raise SingularConditioning("conditioning covariance is singular")
        sxy = sxy - cov[np.ix_(xi, zi)] @ np.linalg.solve(szz, cov[np.ix_(zi, yi)])
    return float(np.max(np.abs(sxy), initial=0.0))


def gaussian_ci(s: GaussianLinearSem, x, y, z=(), tol: float = 1e-8) -> bool:
    return gaussian_ci_defect(s, x, y, z) < tol


def random_gaussian_sem(
    rng: np.random.Generator,
    n_nodes: int,
    edge_prob: float = 0.3,
    max_hyperedges: int = 2,
    min_det: float = 1e-3,
) -> GaussianLinearSem:
    """Random cyclic linear model; coefficients are rescaled until ``|det(I - B)| >= min_det``."""
    nodes = [f"v{i}" for i in range(1, n_nodes + 1)]
    edges = [(a, b) for a in nodes for b in nodes if a != b and rng.random() < edge_prob]
    hyper = [list(rng.choice(nodes, size=int(rng.integers(2, n_nodes + 1)), replace=False)) for _ in range(int(rng.integers(0, max_hyperedges + 1))) if n_nodes >= 2]
    g = Hedg.build(nodes, edges, hyper)
    pos = {v: i for i, v in enumerate(nodes)}
    b = np.zeros((n_nodes, n_nodes))
    for a, c in g.edges:
        b[pos[c], pos[a]] = rng.uniform(0.3, 1.0) * rng.choice([-1, 1])
    while abs(np.linalg.det(np.eye(n_nodes) - b)) < min_det:
        b *= 0.8
    lam = np.diag(rng.uniform(0.5, 1.5, n_nodes))
    for f in g.hyperedges:
        idx = [pos[v] for v in f]
        c = rng.normal(size=len(idx))
        lam[np.ix_(idx, idx)] += np.outer(c, c)
    return GaussianLinearSem(g, b, lam)


# Nonlinear cyclic example


def nonlinear_example(seed: int | None, n: int = 10**6, linear: bool = False, guard: float = 1e-9) -> dict[str, np.ndarray]:
    """Samples of the cycle ``w -> x -> y -> z -> w`` with a self-loop at ``w``.

    Equations (standard normal errors)::

        W = (W + Z + E_W) / 2,  X = W * E_X,  Y = X + E_Y,  Z = Y * E_Z

    solved in closed form.  With ``linear=True`` the products become
    ``X = W / 2 + E_X`` and ``Z = Y / 2 + E_Z``.
    """
    if n < 10**5:
        raise ValueError("at least 10^5 samples are required")
    rng = np.random.default_rng(seed)
    ew, ex, ey, ez = rng.standard_normal((4, n))
    if linear:
        # W = Z + E_W, X = W/2 + E_X, Y = X + E_Y, Z = Y/2 + E_Z; loop gain 1/4
        w = (ew + ey / 2 + ez + ex / 2) / (1 - 0.25)
        x = w / 2 + ex
        y = x + ey
        z = y / 2 + ez
        return {"W": w, "X": x, "Y": y, "Z": z}
    den = 1 - ex * ez
    bad = np.abs(den) < guard
    if bad.mean() > 1e-4:
        raise DegenerateSample(f"{int(bad.sum())} draws hit the singular set")
    keep = ~bad
    ew, ex, ey, ez, den = ew[keep], ex[keep], ey[keep], ez[keep], den[keep]
    w = (ew + ey * ez) / den
    x = w * ex
    y = x + ey
    z = y * ez
    return {"W": w, "X": x, "Y": y, "Z": z}


class CmiResult(NamedTuple):
    statistic: float
    null_quantiles: dict[float, float]
    null: np.ndarray

    def exceeds(self, q: float) -> bool:
        return self.statistic > self.null_quantiles[q]


def _quantile_codes(a: np.ndarray, bins: int) -> np.ndarray:
    ranks = np.empty(len(a), dtype=np.int64)
    ranks[np.argsort(a, kind="stable")] = np.arange(len(a))
    return ranks * bins // len(a)


def _cmi(xc: np.ndarray, yc: np.ndarray, sc: np.ndarray, bx: int, by: int, ns: int) -> float:
    c = np.bincount((sc * bx + xc) * by + yc, minlength=ns * bx * by).reshape(ns, bx, by).astype(float)
    ps = c.sum(axis=(1, 2))[:, None, None]
    pxs = c.sum(axis=2)[:, :, None]
    pys = c.sum(axis=1)[:, None, :]
    nz = c > 0
    return float(np.sum(c[nz] * np.log((c * ps)[nz] / (pxs * pys)[nz])) / c.sum())


def cmi_estimate(
    samples: Mapping[str, np.ndarray],
    x: str,
    y: str,
    z: Sequence[str] = (),
    bins: int = 4,
    permutations: int = 99,
    seed: int | None = 0,
    cond_bins: int | None = None,
    residualize: bool = True,
) -> CmiResult:
    """Discretized conditional mutual information with a within-stratum permutation null.

    ``x`` and ``y`` are first replaced by their least-squares residuals on
    ``z`` (a one-to-one shift for fixed ``z``, so conditional independence
    is unaffected), then all variables are cut at empirical quantiles.  The
    null permutes the ``x`` codes inside each ``z`` stratum.
    """
    xv = np.asarray(samples[x], float)
    yv = np.asarray(samples[y], float)
    zs = [np.asarray(samples[c], float) for c in z]
    cond_bins = cond_bins or bins
    if residualize and zs:
        design = np.column_stack([np.ones(len(xv))] + zs)
        xv = xv - design @ np.linalg.lstsq(design, xv, rcond=None)[0]
        yv = yv - design @ np.linalg.lstsq(design, yv, rcond=None)[0]
    xc = _quantile_codes(xv, bins)
    yc = _quantile_codes(yv, bins)
    sc = np.zeros(len(xv), dtype=np.int64)
    for c in zs:
        sc = sc * cond_bins + _quantile_codes(c, cond_bins)
    ns = cond_bins ** len(zs)
    stat = _cmi(xc, yc, sc, bins, bins, ns)
    rng = np.random.default_rng(seed)
    slots = np.argsort(sc, kind="stable")
    null = np.empty(permutations)
    xp = np.empty_like(xc)
    for k in range(permutations):
        src = np.lexsort((rng.random(len(xc)), sc))
        xp[slots] = xc[src]
        null[k] = _cmi(xp, yc, sc, bins, bins, ns)
    qs = {q: float(np.quantile(null, q)) for q in (0.5, 0.95, 0.99)}
    return CmiResult(stat, qs, null)
