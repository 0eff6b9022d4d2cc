"""Topical maps: monotone, additively homogeneous, sup-norm nonexpansive.

The concrete representation is a per-coordinate min-max tree over affine
terms ``a @ x + b`` with ``a`` a probability vector. Markov decision
process value-iteration operators are the special case of one ``Max``
node per state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

STOCHASTIC_ATOL = 1e-12


class TopicalError(ValueError):
    pass


@dataclass(frozen=True)
class Affine:
    coeffs: tuple[float, ...]
    offset: float

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=float)
        if a.ndim != 1 or a.size == 0 or not np.all(np.isfinite(a)):
            raise TopicalError(f"bad affine coefficients {self.coeffs}")
        if np.any(a < 0):
            raise TopicalError(f"affine coefficients must be nonnegative: {self.coeffs}")
        if abs(a.sum() - 1.0) > STOCHASTIC_ATOL:
            raise TopicalError(f"affine coefficients must sum to 1, got {a.sum()!r}")
        if not math.isfinite(self.offset):
            raise TopicalError("affine offset must be finite")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in a))
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True)
class Max:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise TopicalError("Max needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Min:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise TopicalError("Min needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))


def _leaves(node, out: list) -> None:
    if isinstance(node, Affine):
        out.append(node)
    elif isinstance(node, (Max, Min)):
        for c in node.children:
            _leaves(c, out)
    else:
        raise TopicalError(f"unknown topical node {node!r}")


class TopicalMap:
    """Base class; subclasses implement ``_apply`` on float arrays."""

    dim: int
    piecewise_affine: bool = True

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dim:
            raise TopicalError(f"dimension mismatch: map has dim {self.dim}, got {x.size}")
        return self._apply(x)

    def _apply(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError


class MinMaxMap(TopicalMap):
    """Coordinate ``i`` is ``coords[i]``, a tree of Min/Max over Affine leaves."""

    def __init__(self, coords: Sequence):
        coords = tuple(coords)
        if not coords:
            raise TopicalError("map needs at least one coordinate")
        self.coords = coords
        self.dim = len(coords)
        leaves: list[Affine] = []
        for node in coords:
            _leaves(node, leaves)
        for leaf in leaves:
            if len(leaf.coeffs) != self.dim:
                raise TopicalError(
                    f"affine term has {len(leaf.coeffs)} coefficients, map has dim {self.dim}")
        # all leaves are evaluated with a single matrix product
        self._index = {}
        for leaf in leaves:
            self._index.setdefault(id(leaf), len(self._index))
        order = sorted(self._index.items(), key=lambda kv: kv[1])
        by_id = {id(leaf): leaf for leaf in leaves}
        self._A = np.array([by_id[k].coeffs for k, _ in order])
        self._b = np.array([by_id[k].offset for k, _ in order])

    def _reduce(self, node, vals: list[float]) -> float:
        if isinstance(node, Affine):
            return vals[self._index[id(node)]]
        if isinstance(node, Max):
            return max(self._reduce(c, vals) for c in node.children)
        return min(self._reduce(c, vals) for c in node.children)

    def _apply(self, x):
        vals = (self._A @ x + self._b).tolist()
        return np.array([self._reduce(node, vals) for node in self.coords])

    def __repr__(self):
        return f"MinMaxMap(dim={self.dim})"


class SmoothTopicalMap(TopicalMap):
    """Topical map given by a callable; not piecewise affine, evaluation only."""

    piecewise_affine = False

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], dim: int):
        self._func = func
        self.dim = dim

    def _apply(self, x):
        return np.asarray(self._func(x), dtype=float)


class AveragedMap(TopicalMap):
    """x -> (1 - weight) x + weight F(x)."""

    def __init__(self, base: TopicalMap, weight: float = 0.5):
        if not 0.0 < weight <= 1.0:
            raise TopicalError("averaging weight must lie in (0, 1]")
        self.base = base
        self.weight = weight
        self.dim = base.dim
        self.piecewise_affine = base.piecewise_affine

    def _apply(self, x):
        return (1.0 - self.weight) * x + self.weight * self.base._apply(x)


class ShiftedMap(TopicalMap):
    """x -> F(x) - w."""

    def __init__(self, base: TopicalMap, w):
        self.base = base
        self.w = np.array(w, dtype=float).reshape(-1)
        if self.w.size != base.dim:
            raise TopicalError("shift vector has wrong dimension")
        self.dim = base.dim
        self.piecewise_affine = base.piecewise_affine

    def _apply(self, x):
        return self.base._apply(x) - self.w


def mdp_operator(actions: Sequence[Sequence[tuple[float, Sequence[float]]]]) -> MinMaxMap:
    """Value-iteration operator ``x_s -> max_a reward(s,a) + P(s,a) @ x``.

    `actions[s]` lists ``(reward, probabilities)`` pairs for state ``s``.
    """
    coords = []
    for s, acts in enumerate(actions):
        if not acts:
            raise TopicalError(f"state {s + 1} has no actions")
        coords.append(Max(tuple(Affine(tuple(p), r) for r, p in acts)))
    return MinMaxMap(coords)


def eval_topical(F: TopicalMap, x) -> np.ndarray:
    return F(x)


def iterate(F: TopicalMap, x0, k: int) -> np.ndarray:
    x = np.asarray(x0, dtype=float)
    for _ in range(k):
        x = F._apply(x)
    return x


@dataclass
class KMResult:
    converged: bool
    fixed_point: np.ndarray | None
    iterations: int
    residual: float
    cycle_time: np.ndarray | None = None


def km_fixed_point(F: TopicalMap, x0, tol: float = 1e-10, max_iters: int = 100_000,
                   cycle_time_steps: int = 1000) -> KMResult:
    """Averaged iteration ``x <- (x + F(x)) / 2`` until ``|F(x) - x|_inf < tol``.

    On failure the result carries a cycle-time estimate of `F` from `x0`;
    a nonzero estimate means no fixed point exists.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    if x.size != F.dim:
        raise TopicalError("start vector has wrong dimension")
    res = math.inf
    for k in range(max_iters + 1):
        fx = F._apply(x)
        res = float(np.max(np.abs(fx - x)))
        if res < tol:
            return KMResult(True, x, k, res)
        if not np.all(np.isfinite(fx)):
            break
        x = 0.5 * x + 0.5 * fx
    w = cycle_time(F, x0, cycle_time_steps)
    return KMResult(False, None, max_iters, res, w)


def cycle_time(F: TopicalMap, x0, K: int = 1000) -> np.ndarray:
    """Estimate of the cycle-time vector, F^K(x0) / K."""
    if K < 1:
        raise TopicalError("K must be positive")
    return iterate(F, x0, K) / K


@dataclass(frozen=True)
class HalfLine:
    """Candidate invariant half-line t -> v + t*w."""

    v: np.ndarray
    w: np.ndarray
    verified: bool = False


def default_t_grid(T: float = 50.0, points: int = 21) -> np.ndarray:
    return np.linspace(0.0, T, points)


def half_line_check(F: TopicalMap, h: HalfLine, ts=None, atol: float = 1e-10) -> bool:
    """True iff F(v + t w) = v + (t + 1) w on every sampled t."""
    ts = default_t_grid() if ts is None else np.asarray(ts, dtype=float)
    if ts.size < 10 or np.any(ts < 0):
        raise TopicalError("need at least 10 nonnegative sample points")
    v = np.asarray(h.v, dtype=float)
    w = np.asarray(h.w, dtype=float)
    for t in ts:
        if np.max(np.abs(F(v + t * w) - (v + (t + 1) * w))) > atol:
            return False
    return True


def verified_half_line(F: TopicalMap, v, w, ts=None) -> HalfLine:
    h = HalfLine(np.array(v, dtype=float), np.array(w, dtype=float))
    if not half_line_check(F, h, ts):
        raise TopicalError("half-line identity fails")
    return HalfLine(h.v, h.w, verified=True)


def find_half_line(F: TopicalMap, w, x0, max_power: int = 14, ts=None) -> HalfLine | None:
    """Search v among orbit points F^m(x0), m = 0, 1, 2, 4, ..., 2**max_power."""
    x = np.array(x0, dtype=float)
    done = 0
    for m in [0] + [2 ** p for p in range(max_power + 1)]:
        x = iterate(F, x, m - done)
        done = m
        h = HalfLine(x.copy(), np.array(w, dtype=float))
        if half_line_check(F, h, ts):
            return HalfLine(h.v, h.w, verified=True)
    return None


def reduce_by_half_line(F: TopicalMap, w) -> ShiftedMap:
    """G(x) = F(x) - w; orbits of F are eventually G-orbits plus k*w."""
    return ShiftedMap(F, w)


class ReductionError(TopicalError):
    pass


def reduction_offset(F: TopicalMap, w, x, k_max: int = 20, atol: float = 1e-8,
                     m_max: int = 2 ** 14) -> int:
    """Smallest tried m (0, 1, 2, 4, ...) with F^{k+m}(x) = G^k(F^m(x)) + k w for k <= k_max."""
    G = reduce_by_half_line(F, w)
    w = G.w
    fm = np.array(x, dtype=float)
    done = 0
    m = 0
    while m <= m_max:
        fm = iterate(F, fm, m - done)
        done = m
        f = fm.copy()
        g = fm.copy()
        ok = True
        for k in range(1, k_max + 1):
            f = F._apply(f)
            g = G._apply(g)
            if np.max(np.abs(f - (g + k * w))) > atol:
                ok = False
                break
        if ok:
            return m
        m = 1 if m == 0 else 2 * m
    raise ReductionError(f"reduction identity fails for all m <= {m_max}; w is likely wrong")


@dataclass(frozen=True)
class LocalLinear:
    m: int
    gamma: float
    tail: tuple[int, int]
    orbit_length: int


class LocalLinearError(TopicalError):
    pass


def verify_local_linear(F: TopicalMap, u, x0, max_iters: int = 200_000,
                        u_atol: float = 1e-6, floor: float = 1e-11) -> LocalLinear:
    """Find m in {1, 2, 4, ..., 256} and gamma < 1 with
    |F^{k+m}(x0) - u| <= gamma |F^k(x0) - u| over the orbit tail.

    The orbit is run to numerical stagnation and its endpoint, which must lie
    within `u_atol` of `u`, serves as the reference limit. The tail is the
    second half of the stretch where the error exceeds ``floor * scale``.
    """
    u = np.asarray(u, dtype=float)
    x = np.array(x0, dtype=float)
    scale = max(1.0, float(np.max(np.abs(u))))
    orbit = [x]
    for _ in range(max_iters):
        nxt = F._apply(x)
        step = float(np.max(np.abs(nxt - x)))
        x = nxt
        orbit.append(x)
        if step <= 1e-15 * scale:
            break
    else:
        raise LocalLinearError("orbit did not settle within max_iters")
    limit = orbit[-1]
    if np.max(np.abs(limit - u)) > u_atol * scale:
        raise LocalLinearError("orbit does not converge to the given fixed point")
    err = np.array([np.max(np.abs(p - limit)) for p in orbit])
    above = np.flatnonzero(err > floor * scale)
    if above.size == 0:
        return LocalLinear(1, 0.0, (0, 0), len(orbit))
    last = int(above[-1])
    start = last // 2
    for m in [2 ** p for p in range(9)]:
        ratios = []
        for k in range(start, last + 1):
            if err[k] <= floor * scale:
                continue
            ahead = err[k + m] if k + m < err.size else 0.0
            ratios.append(ahead / err[k])
        gamma = max(ratios)
        if gamma < 1.0:
            return LocalLinear(m, float(gamma), (start, last), len(orbit))
    raise LocalLinearError("no m <= 256 gives a contraction over the orbit tail")


def random_topical(rng: np.random.Generator, n: int = 3, kind: str = "mdp",
                   n_terms: int = 3, n_groups: int = 2) -> tuple[MinMaxMap, np.ndarray]:
    """Random topical map with a planted fixed point; returns ``(F, u)``.

    ``kind="mdp"`` gives one Max of `n_terms` affine terms per state;
    ``kind="minmax"`` gives a Min over `n_groups` such Max nodes.
    Offsets are chosen so that ``F(u) = u``.
    """
    u = rng.uniform(-2.0, 2.0, size=n)

    def group(s: int, excess: float) -> Max:
        terms = []
        tight = rng.integers(n_terms)
        for t in range(n_terms):
            p = rng.dirichlet(np.ones(n))
            # a few sparse rows so ties and boundary pieces show up
            if rng.random() < 0.3:
                p = np.zeros(n)
                p[rng.integers(n)] = 1.0
            slack = 0.0 if t == tight else rng.uniform(0.0, 1.0)
            terms.append(Affine(tuple(p), float(u[s] - p @ u - slack + excess)))
        return Max(tuple(terms))

    coords = []
    for s in range(n):
        if kind == "mdp":
            coords.append(group(s, 0.0))
        elif kind == "minmax":
            tight = rng.integers(n_groups)
            groups = [group(s, 0.0 if g == tight else rng.uniform(0.0, 1.0))
                      for g in range(n_groups)]
            coords.append(Min(tuple(groups)))
        else:
            raise TopicalError(f"unknown kind {kind!r}")
    return MinMaxMap(coords), u
