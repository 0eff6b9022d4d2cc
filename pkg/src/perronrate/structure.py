"""Combinatorial structure of a map: classes, Collatz-Wielandt numbers,
existence of positive eigenvectors, type-K test and period."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from perronrate.cone import MIN_ENTRY
from perronrate.maps import Digraph, MapModel

BASIC_RTOL = 1e-8


class StructureWarning(UserWarning):
    pass


class CWError(ValueError):
    """The restricted map leaves the open cone of its coordinates."""


def scc(g: Digraph) -> list[tuple[int, ...]]:
    """Strongly connected components in topological order (arcs go forward).

    Iterative Tarjan; each component is a sorted tuple of vertices.
    """
    succ = g.successors()
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack = [False] * g.n
    stack: list[int] = []
    out: list[tuple[int, ...]] = []
    counter = 0
    for root in range(g.n):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            while i < len(succ[v]):
                w = succ[v][i]
                i += 1
                if w not in index:
                    work.append((v, i))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(tuple(sorted(comp)))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    out.reverse()
    return out


@dataclass(frozen=True)
class CWNumber:
    """Upper Collatz-Wielandt number r(f_J) with its certified bracket."""

    value: float
    lower: float
    upper: float
    converged: bool
    iterations: int
    vector: np.ndarray = field(repr=False, compare=False)

    def __float__(self):
        return self.value


def cw_number(model: MapModel, J, tol: float = 1e-10, max_iters: int = 100_000) -> CWNumber:
    """r(f_J) for f_J = P_J f P_J, by normalized iteration of f_J + c*id.

    The shift c keeps the iteration aperiodic without moving the eigenvector;
    the reported bracket is [min_j f_J(x)_j / x_j, max_j f_J(x)_j / x_j],
    which always contains r(f_J).

    Restrictions that send interior points to the boundary are allowed:
    the shift keeps the iterate interior, but the bracket then usually does
    not close and the result is flagged as not converged.
    """
    J = np.array(sorted(set(int(j) for j in J)), dtype=int)
    if J.size == 0:
        raise ValueError("J must be nonempty")
    if J[0] < 0 or J[-1] >= model.dim:
        raise ValueError("J has vertices out of range")
    x = np.zeros(model.dim)
    x[J] = 1.0
    shift = None
    best_hi, best_lo = math.inf, 0.0
    prev_hi = math.inf
    flat = 0
    converged = False
    k = 0
    for k in range(1, max_iters + 1):
        with np.errstate(all="ignore"):
            y = model._eval(x)[J]
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise CWError(f"restriction to {[int(j) + 1 for j in J]} is not a nonnegative map")
        ratios = y / x[J]
        hi, lo = float(ratios.max()), float(ratios.min())
        if hi == 0.0:
            best_hi, best_lo, converged = 0.0, 0.0, True
            break
        best_hi, best_lo = min(best_hi, hi), max(best_lo, lo)
        if best_hi - best_lo <= tol * best_hi:
            converged = True
            break
        flat = flat + 1 if prev_hi - hi <= 1e-15 * hi else 0
        if flat >= 100:
            break
        prev_hi = hi
        if shift is None:
            shift = hi
        z = y + shift * x[J]
        z /= z.max()
        if z.min() < MIN_ENTRY:
            break
        x[J] = z
    vec = x.copy()
    vec.flags.writeable = False
    return CWNumber(best_hi, best_lo, best_hi, converged, k, vec)


@dataclass(frozen=True)
class ClassDecomposition:
    classes: tuple[tuple[int, ...], ...]
    is_final: tuple[bool, ...]
    cw: tuple[CWNumber, ...]
    is_basic: tuple[bool, ...]
    r_global: float

    @property
    def cw_numbers(self) -> tuple[float, ...]:
        return tuple(c.value for c in self.cw)

    def final_classes(self) -> list[tuple[int, ...]]:
        return [c for c, f in zip(self.classes, self.is_final) if f]

    def basic_classes(self) -> list[tuple[int, ...]]:
        return [c for c, b in zip(self.classes, self.is_basic) if b]


def classify(model: MapModel, g: Digraph | None = None, tol: float = 1e-10) -> ClassDecomposition:
    g = model.digraph() if g is None else g
    classes = scc(g)
    where = {}
    for ci, comp in enumerate(classes):
        for v in comp:
            where[v] = ci
    final = [True] * len(classes)
    for i, j in g.arcs:
        if where[i] != where[j]:
            final[where[i]] = False
    cws = tuple(cw_number(model, comp, tol=tol) for comp in classes)
    r = max(c.value for c in cws)
    basic = tuple(abs(c.value - r) <= BASIC_RTOL * r for c in cws)
    return ClassDecomposition(tuple(classes), tuple(final), cws, basic, r)


@dataclass(frozen=True)
class EigenvectorCertificate:
    exists: bool
    basic: tuple[tuple[int, ...], ...]
    final: tuple[tuple[int, ...], ...]
    exact: bool
    note: str = ""

    def __bool__(self):
        return self.exists


def has_positive_eigenvector(model: MapModel,
                             decomposition: ClassDecomposition | None = None) -> EigenvectorCertificate:
    """Positive eigenvector exists iff basic classes and final classes coincide.

    Sufficiency needs multiplicative convexity; necessity also needs
    analyticity. Outside that class the verdict is flagged as inexact.
    """
    d = classify(model) if decomposition is None else decomposition
    basic = tuple(d.basic_classes())
    final = tuple(d.final_classes())
    exists = set(basic) == set(final)
    exact = model.multiplicatively_convex and model.analytic
    note = ""
    if not model.multiplicatively_convex:
        note = "map is not multiplicatively convex; criterion is advisory"
    elif not model.analytic:
        note = "map is not analytic; only basic == final => existence is guaranteed"
    if note:
        warnings.warn(note, StructureWarning, stacklevel=2)
    return EigenvectorCertificate(exists, basic, final, exact, note)


def is_type_k(model: MapModel, g: Digraph | None = None) -> bool:
    """Every vertex of G(f) has a self-loop."""
    g = model.digraph() if g is None else g
    return all((i, i) in g.arcs for i in range(g.n))


def recurrent_vertices(g: Digraph) -> list[int]:
    """Vertices lying on at least one cycle."""
    out = []
    for comp in scc(g):
        if len(comp) > 1 or (comp[0], comp[0]) in g.arcs:
            out.extend(comp)
    return sorted(out)


def cyclicity(g: Digraph, comp) -> int:
    """gcd of cycle lengths in a strongly connected component (0 if acyclic)."""
    comp = set(comp)
    succ = g.successors()
    root = min(comp)
    level = {root: 0}
    queue = [root]
    for v in queue:
        for w in succ[v]:
            if w in comp and w not in level:
                level[w] = level[v] + 1
                queue.append(w)
    d = 0
    for v in comp:
        for w in succ[v]:
            if w in comp:
                d = math.gcd(d, level[v] + 1 - level[w])
    return abs(d)


def period(model_or_graph) -> int:
    """Smallest p >= 1 such that G^p has a self-loop at every recurrent vertex.

    The lcm of per-class cyclicities is computed first; the returned value
    is the smallest p verified by boolean powering.
    """
    g = model_or_graph if isinstance(model_or_graph, Digraph) else model_or_graph.digraph()
    rec = recurrent_vertices(g)
    if len(rec) < g.n:
        transient = sorted(set(range(g.n)) - set(rec))
        warnings.warn(f"vertices {[v + 1 for v in transient]} lie on no cycle; "
                      "period covers the recurrent part only", StructureWarning, stacklevel=2)
    if not rec:
        return 1
    ds = [cyclicity(g, c) for c in scc(g) if set(c) <= set(rec)]
    lcm = reduce(lambda a, b: a * b // math.gcd(a, b), ds, 1)
    A = g.adjacency().astype(np.int64)
    bound = lcm * ((g.n - 1) ** 2 + 1)
    P = A.copy()
    for p in range(1, bound + 1):
        if np.all(np.diag(P)[rec] > 0):
            return p
        P = np.minimum(P @ A, 1)
    raise RuntimeError("period search exceeded its bound")  # pragma: no cover
