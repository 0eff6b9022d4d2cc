"""Normalized and damped power iteration for homogeneous order-preserving maps."""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from perronrate.cone import MIN_ENTRY, hilbert, normalize_sup, positive_vector
from perronrate.maps import MapModel

DEFAULT_WINDOW = 64


@dataclass(frozen=True)
class SolveOptions:
    tolerance: float = 1e-10
    max_iters: int = 100_000
    damping: float | None = None
    record_trace: bool = False
    seed: int = 0
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.damping is not None and not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if self.window < 1:
            raise ValueError("window must be positive")


@dataclass
class OrbitTrace:
    """Sup-normalized iterates with per-step Collatz-Wielandt brackets.

    ``max_ratio[k]`` and ``min_ratio[k]`` bracket the eigenvalue using
    ``f(x_k) / x_k``; ``growth[k]`` is ``|f(x_k)|_inf`` so that
    ``f^k(x_0) = x_k * prod(growth[:k])`` when ``x_0`` has sup-norm 1.
    """

    iterates: list[np.ndarray] = field(default_factory=list)
    max_ratio: list[float] = field(default_factory=list)
    min_ratio: list[float] = field(default_factory=list)
    d_hilbert_step: list[float] = field(default_factory=list)
    growth: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.iterates)

    def write_csv(self, path) -> None:
        """Columns k, x_1..x_n, M_k, m_k, dH_step (one row per recorded step)."""
        n = self.iterates[0].size if self.iterates else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", *[f"x_{i + 1}" for i in range(n)], "M_k", "m_k", "dH_step"])
            for k in range(len(self.max_ratio)):
                w.writerow([k, *[repr(float(v)) for v in self.iterates[k]],
                            repr(self.max_ratio[k]), repr(self.min_ratio[k]),
                            repr(self.d_hilbert_step[k])])


@dataclass
class SolveResult:
    eigenvector: np.ndarray
    eigenvalue_bracket: tuple[float, float]
    converged: bool
    iterations: int
    trace: OrbitTrace | None = None
    period_detected: int | None = None
    diagnostic: str = ""

    @property
    def eigenvalue(self) -> float:
        lo, hi = self.eigenvalue_bracket
        return 0.5 * (lo + hi)

    @property
    def residual(self) -> float:
        lo, hi = self.eigenvalue_bracket
        return math.log(hi / lo)


def random_start(rng: np.random.Generator, n: int) -> np.ndarray:
    """exp(uniform[-1, 1]^n), uniform in the multiplicative sense."""
    return np.exp(rng.uniform(-1.0, 1.0, size=n))


def _period_of(iterates: Sequence[np.ndarray], window: int, tol: float) -> int | None:
    pts = list(iterates)
    if len(pts) < 2 * window:
        return None
    logs = np.log(np.array(pts[-2 * window:]))
    for p in range(1, window + 1):
        d = logs[window - p: 2 * window - p] - logs[window:]
        if np.all(d.max(axis=1) - d.min(axis=1) < tol):
            return p
    return None


def detect_period(trace, window: int = DEFAULT_WINDOW, tol: float = 1e-10) -> int | None:
    """Smallest p <= window with d_H(x_k, x_{k+p}) < tol across the final window.

    `trace` is an :class:`OrbitTrace` or a sequence of positive vectors.
    """
    pts = trace.iterates if isinstance(trace, OrbitTrace) else trace
    if len(pts) < 2 * window:
        raise ValueError(f"need at least {2 * window} iterates, got {len(pts)}")
    return _period_of(pts, window, tol)


def _solve(model: MapModel, x0, opts: SolveOptions, damping: float | None) -> SolveResult:
    x = normalize_sup(positive_vector(x0))
    if x.size != model.dim:
        raise ValueError(f"start vector has dim {x.size}, map has dim {model.dim}")
    x = np.array(x)
    trace = OrbitTrace() if opts.record_trace else None
    recent: deque = deque(maxlen=2 * opts.window)
    recent.append(x)
    diagnostic = ""
    period = None
    lo = hi = float("nan")
    for k in range(opts.max_iters):
        with np.errstate(all="ignore"):
            y = model._eval(x)
        if not np.all(np.isfinite(y)) or np.any(y <= 0):
            diagnostic = f"map evaluation left the open cone at step {k}"
            break
        ratios = y / x
        hi, lo = float(ratios.max()), float(ratios.min())
        residual = math.log(hi / lo)
        if damping is None:
            nxt = y / y.max()
        else:
            z = damping * y / hi + (1.0 - damping) * x
            nxt = z / z.max()
        if trace is not None:
            trace.iterates.append(x)
            trace.max_ratio.append(hi)
            trace.min_ratio.append(lo)
            trace.growth.append(float(y.max()))
            trace.d_hilbert_step.append(
                float(np.ptp(np.log(nxt) - np.log(x))) if nxt.min() > 0 else math.inf)
        if residual < opts.tolerance:
            if trace is not None:
                trace.iterates.append(nxt)
            return SolveResult(x, (lo, hi), True, k, trace)
        if nxt.min() < MIN_ENTRY:
            diagnostic = f"iterate reached the boundary of the cone at step {k + 1}"
            x = nxt
            break
        x = nxt
        recent.append(x)
        if (k + 1) % opts.window == 0:
            p = _period_of(recent, opts.window, opts.tolerance)
            if p is not None and p > 1:
                period = p
                diagnostic = f"orbit is periodic with period {p}"
                break
    else:
        diagnostic = f"no convergence within {opts.max_iters} iterations"
        period = _period_of(recent, opts.window, opts.tolerance)
    if trace is not None:
        trace.iterates.append(x)
    return SolveResult(x, (lo, hi), False, k + 1, trace, period, diagnostic)


def iterate_normalized(model: MapModel, x0, opts: SolveOptions | None = None) -> SolveResult:
    """x_{k+1} = f(x_k) / |f(x_k)|_inf until d_H(x_k, f(x_k)) < tolerance.

    Non-convergent runs stop early once a periodic orbit of period >= 2 is
    seen in the last ``2 * window`` iterates.
    """
    return _solve(model, x0, opts or SolveOptions(), None)


def iterate_damped(model: MapModel, x0, opts: SolveOptions | None = None,
                   damping: float | None = None) -> SolveResult:
    """x_{k+1} = normalize(lam * f(x_k) / M_k + (1 - lam) * x_k).

    M_k = max_i f(x_k)_i / (x_k)_i rescales f toward eigenvalue 1, so the
    fixed points of the damped step are exactly the eigenvectors of f.
    """
    opts = opts or SolveOptions()
    lam = damping if damping is not None else opts.damping
    if lam is None or not 0.0 < lam < 1.0:
        raise ValueError("damped iteration needs damping in (0, 1)")
    return _solve(model, x0, opts, lam)


def solve(model: MapModel, x0, opts: SolveOptions | None = None) -> SolveResult:
    opts = opts or SolveOptions()
    if opts.damping:
        return iterate_damped(model, x0, opts)
    return iterate_normalized(model, x0, opts)


def type_k_witness(model: MapModel, x, y) -> float | None:
    """Largest eps with f(y) - f(x) >= eps (y - x), or None when it is <= 0."""
    x = positive_vector(x)
    y = positive_vector(y)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    if np.any(x > y) or np.array_equal(x, y):
        raise ValueError("type-K witness needs x <= y with x != y")
    diff = model.evaluate(y) - model.evaluate(x)
    moved = y > x
    eps = float(np.min(diff[moved] / (y - x)[moved]))
    return eps if eps > 0 else None


def eigen_residual(model: MapModel, u) -> float:
    """d_H(f(u), u)."""
    return hilbert(model.evaluate(u), u)
