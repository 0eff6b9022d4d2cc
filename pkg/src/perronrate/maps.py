"""Order-preserving, degree-1 homogeneous maps of the open positive orthant.

Four representations share one interface (:class:`MapModel`):

* :class:`MatrixMap` -- ``x -> A x`` for a nonnegative matrix without zero rows.
* :class:`TensorMap` -- ``x_i -> (sum A[i, i2..im] x_i2 ... x_im) ** (1/(m-1))``.
* :class:`ExprMap` -- per-coordinate trees of Sum/Max/Min over monomials
  ``c * prod x_j ** a_j`` with ``sum a_j = 1``.
* :class:`BuiltinMap` -- two hard-coded arctan maps, conjugated by log/exp,
  that converge sublinearly.

Indices are 0-based in the API; file formats and reports use 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from perronrate import topical
from perronrate.cone import positive_vector

EXPONENT_ATOL = 1e-12
TIE_RTOL = 1e-12


class ModelError(ValueError):
    """Invalid model data or a violated model invariant."""


class NondifferentiableError(ModelError):
    """A Max/Min node has tied branches at the requested point."""


@dataclass(frozen=True)
class Digraph:
    n: int
    arcs: frozenset

    def __post_init__(self):
        arcs = frozenset((int(i), int(j)) for i, j in self.arcs)
        for i, j in arcs:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ModelError(f"arc {(i, j)} out of range for n={self.n}")
        object.__setattr__(self, "arcs", arcs)

    @classmethod
    def from_matrix(cls, A) -> "Digraph":
        A = np.asarray(A)
        n = A.shape[0]
        return cls(n, frozenset((i, j) for i in range(n) for j in range(n) if A[i, j] > 0))

    @classmethod
    def complete(cls, n: int) -> "Digraph":
        return cls(n, frozenset((i, j) for i in range(n) for j in range(n)))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.arcs:
            A[i, j] = True
        return A

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in sorted(self.arcs):
            out[i].append(j)
        return out


class MapModel:
    """Common interface. Subclasses implement ``_eval`` on nonnegative arrays."""

    kind: str = ""
    dim: int
    multiplicatively_convex: bool = True
    analytic: bool = True

    def evaluate(self, x) -> np.ndarray:
        x = positive_vector(x)
        if x.size != self.dim:
            raise ModelError(f"dimension mismatch: map has dim {self.dim}, got {x.size}")
        y = self._eval(x)
        if not np.all(np.isfinite(y)) or np.any(y <= 0):
            raise ModelError(f"map produced a nonpositive or non-finite value: {y}")
        return y

    __call__ = evaluate

    def _eval(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def digraph(self) -> Digraph:  # pragma: no cover - abstract
        raise NotImplementedError

    def jacobian(self, x) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def _check_point(self, x) -> np.ndarray:
        x = positive_vector(x)
        if x.size != self.dim:
            raise ModelError(f"dimension mismatch: map has dim {self.dim}, got {x.size}")
        return x


class MatrixMap(MapModel):
    kind = "matrix"

    def __init__(self, A):
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise ModelError(f"matrix must be square and nonempty, got shape {A.shape}")
        if not np.all(np.isfinite(A)) or np.any(A < 0):
            raise ModelError("matrix entries must be finite and nonnegative")
        zero_rows = np.flatnonzero(~np.any(A > 0, axis=1))
        if zero_rows.size:
            raise ModelError(f"matrix has zero rows {[int(i) + 1 for i in zero_rows]}")
        A.flags.writeable = False
        self.A = A
        self.dim = A.shape[0]

    def _eval(self, x):
        return self.A @ x

    def digraph(self):
        return Digraph.from_matrix(self.A)

    def jacobian(self, x):
        self._check_point(x)
        return self.A.copy()

    def __repr__(self):
        return f"MatrixMap({self.A.tolist()})"


class TensorMap(MapModel):
    """Sparse nonnegative tensor of order m, evaluated as an (m-1)-th root."""

    kind = "tensor"

    def __init__(self, order: int, dim: int, entries: Iterable[tuple[Sequence[int], float]]):
        if order < 2:
            raise ModelError("tensor order must be at least 2")
        if dim < 1:
            raise ModelError("tensor dimension must be positive")
        acc: dict[tuple[int, ...], float] = {}
        for idx, val in entries:
            idx = tuple(int(i) for i in idx)
            if len(idx) != order:
                raise ModelError(f"index {idx} does not have {order} entries")
            if any(not 0 <= i < dim for i in idx):
                raise ModelError(f"index {tuple(i + 1 for i in idx)} out of range 1..{dim}")
            val = float(val)
            if not math.isfinite(val) or val <= 0:
                raise ModelError(f"tensor coefficient at {tuple(i + 1 for i in idx)} must be positive")
            acc[idx] = acc.get(idx, 0.0) + val
        self.order = order
        self.dim = dim
        self.entries = tuple(sorted(acc.items()))
        missing = set(range(dim)) - {idx[0] for idx, _ in self.entries}
        if missing:
            raise ModelError(f"tensor rows {sorted(i + 1 for i in missing)} are identically zero")
        self._rows = np.array([idx[0] for idx, _ in self.entries], dtype=int)
        self._idx = np.array([idx[1:] for idx, _ in self.entries], dtype=int)
        self._coef = np.array([v for _, v in self.entries])

    def _sums(self, x):
        terms = self._coef * np.prod(x[self._idx], axis=1)
        return np.bincount(self._rows, weights=terms, minlength=self.dim)

    def _eval(self, x):
        return self._sums(x) ** (1.0 / (self.order - 1))

    def digraph(self):
        return Digraph(self.dim, frozenset((int(i), int(j))
                                           for i, row in zip(self._rows, self._idx) for j in row))

    def jacobian(self, x):
        x = self._check_point(x)
        k = self.order - 1
        xs = x[self._idx]
        dS = np.zeros((self.dim, self.dim))
        for p in range(k):
            others = np.prod(np.delete(xs, p, axis=1), axis=1)
            np.add.at(dS, (self._rows, self._idx[:, p]), self._coef * others)
        S = self._sums(x)
        return (S ** (1.0 / k - 1.0) / k)[:, None] * dS

    def __repr__(self):
        return f"TensorMap(order={self.order}, dim={self.dim}, nnz={len(self.entries)})"


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Monomial:
    coef: float
    exponents: tuple[float, ...]

    def __post_init__(self):
        a = np.asarray(self.exponents, dtype=float)
        c = float(self.coef)
        if not math.isfinite(c) or c <= 0:
            raise ModelError(f"monomial coefficient must be positive, got {self.coef}")
        if a.ndim != 1 or a.size == 0 or not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ModelError(f"monomial exponents must be nonnegative: {self.exponents}")
        if abs(a.sum() - 1.0) > EXPONENT_ATOL:
            raise ModelError(f"monomial exponents must sum to 1, got {a.sum()!r}")
        object.__setattr__(self, "coef", c)
        object.__setattr__(self, "exponents", tuple(float(v) for v in a))


@dataclass(frozen=True)
class Sum:
    children: tuple


@dataclass(frozen=True)
class Max:
    children: tuple


@dataclass(frozen=True)
class Min:
    children: tuple


def _check_node(node, n: int) -> None:
    if isinstance(node, Monomial):
        if len(node.exponents) != n:
            raise ModelError(f"monomial has {len(node.exponents)} exponents, map has dim {n}")
        return
    if not isinstance(node, (Sum, Max, Min)):
        raise ModelError(f"unknown expression node {node!r}")
    if not node.children:
        raise ModelError(f"{type(node).__name__} node needs at least one child")
    for c in node.children:
        _check_node(c, n)


def _has(node, kinds) -> bool:
    if isinstance(node, kinds):
        return True
    return isinstance(node, (Sum, Max, Min)) and any(_has(c, kinds) for c in node.children)


def _node_value(node, x: np.ndarray) -> float:
    if isinstance(node, Monomial):
        return node.coef * float(np.prod(x ** np.asarray(node.exponents)))
    vals = [_node_value(c, x) for c in node.children]
    if isinstance(node, Sum):
        return math.fsum(vals)
    if isinstance(node, Max):
        return max(vals)
    return min(vals)


def _node_grad(node, x: np.ndarray) -> tuple[float, np.ndarray]:
    if isinstance(node, Monomial):
        a = np.asarray(node.exponents)
        v = node.coef * float(np.prod(x ** a))
        return v, v * a / x
    parts = [_node_grad(c, x) for c in node.children]
    if isinstance(node, Sum):
        return math.fsum(p[0] for p in parts), np.sum([p[1] for p in parts], axis=0)
    vals = np.array([p[0] for p in parts])
    best = int(np.argmax(vals) if isinstance(node, Max) else np.argmin(vals))
    others = np.delete(vals, best)
    if others.size and np.min(np.abs(others - vals[best])) <= TIE_RTOL * abs(vals[best]):
        raise NondifferentiableError(
            f"tie at a {type(node).__name__} node at x={x.tolist()}")
    return parts[best]


def _node_arcs(node) -> frozenset:
    if isinstance(node, Monomial):
        return frozenset(j for j, a in enumerate(node.exponents) if a > 0)
    sets = [_node_arcs(c) for c in node.children]
    if isinstance(node, Min):
        return frozenset.intersection(*sets)
    return frozenset.union(*sets)


class ExprMap(MapModel):
    """Coordinate ``i`` of the map is the expression tree ``coords[i]``."""

    kind = "expr"

    def __init__(self, coords: Sequence):
        coords = tuple(coords)
        if not coords:
            raise ModelError("expression map needs at least one coordinate")
        for node in coords:
            _check_node(node, len(coords))
        self.coords = coords
        self.dim = len(coords)
        self.has_min = any(_has(c, Min) for c in coords)
        self.has_sum = any(_has(c, Sum) for c in coords)
        self.has_max = any(_has(c, Max) for c in coords)
        # Min breaks log-convexity; Max/Min break analyticity
        self.multiplicatively_convex = not self.has_min
        self.analytic = not (self.has_min or self.has_max)

    def _eval(self, x):
        return np.array([_node_value(c, x) for c in self.coords])

    def digraph(self):
        return Digraph(self.dim, frozenset((i, j) for i, c in enumerate(self.coords)
                                           for j in _node_arcs(c)))

    def jacobian(self, x):
        x = self._check_point(x)
        return np.array([_node_grad(c, x)[1] for c in self.coords])

    def __repr__(self):
        return f"ExprMap(dim={self.dim})"


# ------------------------------------------------------------------- builtins


def _example1_T(y):
    s = 0.5 * (y[1] - y[0])
    mid = 0.5 * (y[0] + y[1])
    return np.array([mid - math.atan(s), mid + math.atan(s)])


def _example1_dT(y):
    g = 1.0 / (1.0 + (0.5 * (y[1] - y[0])) ** 2)
    return np.array([[0.5 + 0.5 * g, 0.5 - 0.5 * g],
                     [0.5 - 0.5 * g, 0.5 + 0.5 * g]])


def _example2_T(y):
    t = y[1] - y[0]
    return np.array([max(y[0], y[1] - math.atan(t)), max(y[1], y[0] + math.atan(t))])


def _example2_dT(y):
    # at a tie the two branch gradients coincide (t - arctan t has a cubic zero)
    t = y[1] - y[0]
    h = 1.0 / (1.0 + t * t)
    row1 = [1.0, 0.0] if y[0] >= y[1] - math.atan(t) else [h, 1.0 - h]
    row2 = [0.0, 1.0] if y[1] >= y[0] + math.atan(t) else [1.0 - h, h]
    return np.array([row1, row2])


_BUILTINS = {
    "example1": (_example1_T, _example1_dT, False, True),
    "example2": (_example2_T, _example2_dT, True, False),
}


class BuiltinMap(MapModel):
    """``exp o T o log`` for one of the two arctan counterexample maps.

    ``example1`` is analytic but not multiplicatively convex; ``example2``
    is multiplicatively convex but not analytic. Both fix the ray of
    ``(1, 1)`` and attract to it sublinearly.
    """

    kind = "builtin"
    dim = 2

    def __init__(self, tag: str):
        tag = tag.lower().replace("_", "")
        if tag not in _BUILTINS:
            raise ModelError(f"unknown builtin map {tag!r}; choose from {sorted(_BUILTINS)}")
        self.tag = tag
        self._T, self._dT, self.multiplicatively_convex, self.analytic = _BUILTINS[tag]

    def _eval(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.exp(self._T(np.log(x)))

    def log_map(self, y) -> np.ndarray:
        """The additive map T itself, on log coordinates."""
        return self._T(np.asarray(y, dtype=float))

    def digraph(self):
        return Digraph.complete(2)

    def jacobian(self, x):
        x = self._check_point(x)
        fx = self._eval(x)
        return fx[:, None] * self._dT(np.log(x)) / x[None, :]

    def __repr__(self):
        return f"BuiltinMap({self.tag!r})"


# ------------------------------------------------------------- module helpers


def evaluate(model: MapModel, x) -> np.ndarray:
    return model.evaluate(x)


def digraph(model: MapModel) -> Digraph:
    return model.digraph()


def jacobian(model: MapModel, x) -> np.ndarray:
    return model.jacobian(x)


def finite_difference_jacobian(model: MapModel, x, step: float = 1e-6) -> np.ndarray:
    """Central differences with a relative step; independent of ``jacobian``."""
    x = positive_vector(x)
    J = np.empty((model.dim, model.dim))
    for j in range(model.dim):
        h = step * x[j]
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (model._eval(xp) - model._eval(xm)) / (2 * h)
    return J


def _to_topical(node):
    if isinstance(node, Monomial):
        return topical.Affine(node.exponents, math.log(node.coef))
    kids = tuple(_to_topical(c) for c in node.children)
    return topical.Max(kids) if isinstance(node, Max) else topical.Min(kids)


def log_conjugate(model: ExprMap) -> topical.TopicalMap:
    """The additive map ``log o f o exp``.

    Without Sum nodes this is a min-max of affine maps; with Sum nodes a
    smooth map usable for evaluation only is returned.
    """
    if not isinstance(model, ExprMap):
        raise ModelError("log_conjugate needs an expression map")
    if model.has_sum:
        return topical.SmoothTopicalMap(lambda y: np.log(model._eval(np.exp(y))), model.dim)
    return topical.MinMaxMap([_to_topical(c) for c in model.coords])


def variable(j: int, n: int, coef: float = 1.0) -> Monomial:
    """Monomial ``coef * x_j``."""
    a = [0.0] * n
    a[j] = 1.0
    return Monomial(coef, tuple(a))
