"""Exact finite joint distributions.

Provides marginals, an exact conditional-independence test, factor
verification and an iterative-proportional-fitting (IPF) oracle for
factorization over cliques, plus an exact log-linear factorization decider.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .core import HedgError, node_set

__all__ = [
    "UnknownVariable",
    "FiniteDist",
    "Factor",
    "IpfResult",
    "marginal",
    "ci_defect",
    "is_ci",
    "factor_product_check",
    "ipf_fit",
    "factorizes_exactly",
    "tv_distance",
    "CI_TOL",
    "IPF_TOL",
    "FACTOR_TV_THRESHOLD",
]

CI_TOL = 1e-9
IPF_TOL = 1e-10
FACTOR_TV_THRESHOLD = 1e-6


class UnknownVariable(HedgError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown variable"


def _prob(x) -> float:
    if isinstance(x, str):
        return float(Fraction(x.strip()))
    return float(x)


@dataclass(frozen=True, eq=False)
class FiniteDist:
    """Joint probability table over finitely many discrete variables.

    ``variables`` is an ordered tuple of ``(name, domain)`` pairs and
    ``table`` a dense array with one axis per variable.
    """

    variables: tuple[tuple[str, tuple], ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        variables = tuple((str(n), tuple(d)) for n, d in self.variables)
        names = [n for n, _ in variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        table = np.asarray(self.table, dtype=float)
        shape = tuple(len(d) for _, d in variables)
        if table.shape != shape:
            raise ValueError(f"table shape {table.shape} does not match domains {shape}")
        if np.any(table < -1e-15):
            raise ValueError("probabilities must be non-negative")
        total = table.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")
        table = np.clip(table, 0.0, None) / total
        table.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_cells(
        cls,
        variables: Sequence[tuple[str, Sequence]],
        cells: Mapping[tuple, object] | Iterable[tuple[tuple, object]],
    ) -> "FiniteDist":
        """Build from sparse cells; probabilities may be floats or rational strings like ``"1/8"``."""
        variables = tuple((n, tuple(d)) for n, d in variables)
        index = [{val: i for i, val in enumerate(d)} for _, d in variables]
        table = np.zeros(tuple(len(d) for _, d in variables))
        items = cells.items() if isinstance(cells, Mapping) else cells
        for assignment, p in items:
            if len(assignment) != len(variables):
                raise ValueError(f"assignment {assignment} has the wrong length")
            try:
                pos = tuple(ix[val] for ix, val in zip(index, assignment))
            except KeyError as exc:
                raise ValueError(f"value {exc.args[0]!r} outside its domain") from None
            table[pos] += _prob(p)
        return cls(variables, table)

    @classmethod
    def uniform(cls, variables: Sequence[tuple[str, Sequence]]) -> "FiniteDist":
        variables = tuple((n, tuple(d)) for n, d in variables)
        shape = tuple(len(d) for _, d in variables)
        return cls(variables, np.full(shape, 1.0 / max(1, int(np.prod(shape)))))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    @property
    def domains(self) -> dict[str, tuple]:
        return dict(self.variables)

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariable(f"unknown variable: {name}") from None

    def check(self, s: Iterable[str] | str | None) -> frozenset[str]:
        s = node_set(s)
        bad = s - set(self.names)
        if bad:
            raise UnknownVariable(f"unknown variable(s): {', '.join(sorted(bad))}")
        return s

    def prob(self, assignment: Mapping[str, object] | Sequence) -> float:
        if isinstance(assignment, Mapping):
            assignment = [assignment[n] for n in self.names]
        pos = tuple(d.index(val) for (_, d), val in zip(self.variables, assignment))
        return float(self.table[pos])

    def cells(self) -> list[tuple[tuple, float]]:
        """Non-zero cells in row-major order."""
        out = []
        for pos in zip(*np.nonzero(self.table)):
            out.append((tuple(d[i] for (_, d), i in zip(self.variables, pos)), float(self.table[pos])))
        return out

    def reorder(self, names: Sequence[str]) -> "FiniteDist":
        names = list(names)
        if sorted(names) != sorted(self.names):
            raise ValueError("reorder needs a permutation of the variables")
        axes = [self.axis(n) for n in names]
        return FiniteDist(tuple(self.variables[a] for a in axes), np.transpose(self.table, axes))

    def is_positive(self) -> bool:
        return bool(np.all(self.table > 0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteDist):
            return NotImplemented
        return self.variables == other.variables and np.array_equal(self.table, other.table)

    def allclose(self, other: "FiniteDist", tol: float = 1e-12) -> bool:
        if set(self.names) != set(other.names):
            return False
        other = other.reorder(self.names)
        return self.variables == other.variables and float(np.max(np.abs(self.table - other.table), initial=0.0)) <= tol

    def __repr__(self) -> str:
        return f"FiniteDist({[n for n in self.names]}, support={int(np.count_nonzero(self.table))})"


def marginal(p: FiniteDist, s: Iterable[str] | str) -> FiniteDist:
    """Sum out every variable not in ``s``; variable order is preserved."""
    s = p.check(s)
    drop = tuple(i for i, n in enumerate(p.names) if n not in s)
    table = p.table.sum(axis=drop) if drop else p.table
    return FiniteDist(tuple(v for v in p.variables if v[0] in s), table)


def _keep(p: FiniteDist, table: np.ndarray, s: frozenset[str]) -> np.ndarray:
    drop = tuple(i for i, n in enumerate(p.names) if n not in s)
    return table.sum(axis=drop, keepdims=True) if drop else table


def ci_defect(p: FiniteDist, x, y, z=()) -> float:
    """Largest violation of ``p(xyz) p(z) = p(xz) p(yz)`` over all cells.

    Overlapping sets are handled by working with set unions.
    """
    x, y, z = p.check(x), p.check(y), p.check(z)
    if not x or not y:
        return 0.0
    a = x | y | z
    pa = _keep(p, p.table, a)
    lhs = pa * _keep(p, pa, z)
    rhs = _keep(p, pa, x | z) * _keep(p, pa, y | z)
    return float(np.max(np.abs(lhs - rhs)))


def is_ci(p: FiniteDist, x, y, z=(), tol: float = CI_TOL) -> bool:
    """Exact conditional independence of ``x`` and ``y`` given ``z`` up to ``tol``."""
    return ci_defect(p, x, y, z) <= tol


class Factor(NamedTuple):
    scope: tuple[str, ...]
    table: np.ndarray


def _expand(p: FiniteDist, f: Factor) -> np.ndarray:
    scope = tuple(f.scope)
    p.check(scope)
    table = np.asarray(f.table, dtype=float)
    order = sorted(range(len(scope)), key=lambda i: p.axis(scope[i]))
    table = np.transpose(table, order)
    shape = [1] * len(p.names)
    for i in order:
        shape[p.axis(scope[i])] = len(p.domains[scope[i]])
    return table.reshape(shape)


def factor_product_check(p: FiniteDist, factors: Sequence[Factor | tuple], tol: float = 1e-9) -> bool:
    """Whether the pointwise product of ``factors`` reproduces ``p``."""
    prod = np.ones(p.table.shape)
    for f in factors:
        f = Factor(tuple(f[0]), np.asarray(f[1], dtype=float))
        if np.any(f.table < 0):
            raise ValueError("factor tables must be non-negative")
        prod = prod * _expand(p, f)
    return float(np.max(np.abs(prod - p.table), initial=0.0)) <= tol


def tv_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


class IpfResult(NamedTuple):
    fit: FiniteDist
    tv: float
    converged: bool
    iterations: int


def ipf_fit(
    p: FiniteDist,
    cliques: Sequence[Iterable[str]],
    max_iters: int = 100_000,
    tol: float = IPF_TOL,
) -> IpfResult:
    """Iterative proportional fitting of the clique marginals of ``p``.

    Starts from the uniform table and cycles through the cliques until the
    total-variation change over one full cycle drops below ``tol``.  The
    result carries ``converged=False`` when ``max_iters`` cycles were used.
    """
    cliques = [p.check(c) for c in cliques]
    covered = frozenset().union(*cliques) if cliques else frozenset()
    if covered != set(p.names):
        raise ValueError("cliques must cover all variables")
    targets = [_keep(p, p.table, c) for c in cliques]
    fit = np.full(p.table.shape, 1.0 / p.table.size)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        prev = fit
        for c, t in zip(cliques, targets):
            cur = _keep(p, fit, c)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(cur > 0, t / cur, 0.0)
            fit = fit * ratio
        if tv_distance(fit, prev) < tol:
            converged = True
            break
    fit = fit / fit.sum()
    return IpfResult(FiniteDist(p.variables, fit), tv_distance(fit, p.table), converged, it)


def factorizes_exactly(p: FiniteDist, cliques: Sequence[Iterable[str]], tol: float = 1e-9) -> bool:
    """Exact test whether ``p`` is a product of non-negative clique functions.

    Two conditions are necessary and jointly sufficient: the support equals
    the set of cells whose clique marginals are all positive, and ``log p``
    restricted to the support lies in the span of clique indicator features.
    """
    cliques = [p.check(c) for c in cliques]
    margs = [_keep(p, p.table, c) for c in cliques]
    allowed = np.ones(p.table.shape, dtype=bool)
    for m in margs:
        allowed &= np.broadcast_to(m > 0, p.table.shape)
    support = p.table > 0
    if not np.array_equal(allowed, support):
        return False
    cells = np.argwhere(support)
    cols = []
    for c, m in zip(cliques, margs):
        axes = [i for i, n in enumerate(p.names) if n in c]
        dims = [p.table.shape[i] for i in axes]
        codes = np.ravel_multi_index(tuple(cells[:, i] for i in axes), dims) if axes else np.zeros(len(cells), int)
        onehot = np.zeros((len(cells), int(np.prod(dims))))
        onehot[np.arange(len(cells)), codes] = 1.0
        cols.append(onehot)
    design = np.hstack(cols) if cols else np.zeros((len(cells), 0))
    target = np.log(p.table[support])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return float(np.max(np.abs(design @ coef - target), initial=0.0)) <= tol
