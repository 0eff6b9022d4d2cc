"""Empirical R-linear rates, Jacobian spectral-gap bounds and the rate
combination rule for perturbed nonexpansive iterations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from perronrate.cone import hilbert, thompson
from perronrate.eigen import eig_moduli
from perronrate.iteration import OrbitTrace
from perronrate.maps import Digraph, MapModel
from perronrate.structure import cyclicity, scc

FIT_FLOOR = 1e-13
TAIL_FRACTION = 0.3
SUBLINEAR_RATIO = 0.995
LINEAR_MAX_THETA = 0.999
MAX_FIT_RMS = 0.1
MIN_LENGTH = 20


class RateError(ValueError):
    pass


@dataclass
class RateReport:
    theta_hat: float
    classification: str
    window: tuple[int, int]
    residual_rms: float
    median_ratio: float | None = None
    theoretical_bound: float | None = None
    lambda_combined: float | None = None
    combined_rate: float | None = None

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def empirical_rate(distances, floor: float = FIT_FLOOR) -> RateReport:
    """Estimate theta with d_k <= c theta^k from a sequence of distances.

    theta is exp(slope) of a least-squares fit of log d_k against k over the
    last 30% of the entries above `floor`. A tail whose step ratios have
    median above 0.995 and do not decrease is classed sublinear; otherwise
    a fit with theta <= 0.999 and residual RMS <= 0.1 is linear.
    """
    d = np.asarray(distances, dtype=float).reshape(-1)
    if d.size < MIN_LENGTH:
        raise RateError(f"need at least {MIN_LENGTH} distances, got {d.size}")
    if np.any(~np.isfinite(d)) or np.any(d < 0):
        raise RateError("distances must be finite and nonnegative")
    usable = np.flatnonzero(d > floor)
    if usable.size < 2:
        eps = float(np.finfo(float).eps)
        return RateReport(eps, "linear", (0, int(usable[-1]) if usable.size else 0), 0.0)
    last = int(usable[-1])
    usable = usable[usable <= last]
    n_tail = max(2, int(math.ceil(TAIL_FRACTION * usable.size)))
    ks = usable[-n_tail:]
    logs = np.log(d[ks])
    slope, intercept = np.polyfit(ks, logs, 1)
    rms = float(np.sqrt(np.mean((logs - (slope * ks + intercept)) ** 2)))
    theta = float(min(1.0, math.exp(slope)))
    theta = max(theta, float(np.finfo(float).tiny))

    ratios = np.array([d[k + 1] / d[k] for k in ks[:-1] if k + 1 <= last and d[k] > 0])
    median = float(np.median(ratios)) if ratios.size else None
    sub = (median is not None and median > SUBLINEAR_RATIO
           and bool(np.all(np.diff(ratios) >= -1e-12)))
    if sub:
        label = "sublinear"
    elif theta <= LINEAR_MAX_THETA and rms <= MAX_FIT_RMS:
        label = "linear"
    else:
        label = "inconclusive"
    return RateReport(theta, label, (int(ks[0]), int(ks[-1])), rms, median)


def pad_distances(d, length: int = MIN_LENGTH) -> np.ndarray:
    """Extend a converged orbit's distances with zeros up to `length`."""
    d = np.asarray(d, dtype=float)
    if d.size >= length:
        return d
    return np.concatenate([d, np.zeros(length - d.size)])


def is_primitive(g: Digraph) -> bool:
    """Irreducible with cyclicity 1."""
    comps = scc(g)
    return len(comps) == 1 and cyclicity(g, comps[0]) == 1


@dataclass(frozen=True)
class SpectralBound:
    """rho_2 / rho of the Jacobian at an eigenvector.

    `bound` is set only when the Jacobian is primitive; `ratio` is always
    reported.
    """

    bound: float | None
    ratio: float
    reason: str = ""


def jacobian_rate_bound(model: MapModel, u, residual_tol: float = 1e-8) -> SpectralBound:
    res = hilbert(model.evaluate(u), u)
    if res > residual_tol:
        raise RateError(f"u is not an eigenvector (d_H(f(u), u) = {res:.3e})")
    J = model.jacobian(u)
    mod = eig_moduli(J)
    ratio = float(mod[1] / mod[0]) if mod.size > 1 else 0.0
    g = Digraph.from_matrix(J)
    if not is_primitive(g):
        reducible = len(scc(g)) > 1
        reason = "Jacobian is reducible" if reducible else "Jacobian is periodic"
        return SpectralBound(None, ratio, reason)
    return SpectralBound(ratio, ratio)


def combine_rates(eta: float, theta: float) -> tuple[float, float]:
    """lam = log theta / (log eta + log theta) and rate = eta**lam = theta**(1 - lam).

    `eta` is the local contraction rate of the limit map near its fixed point
    and `theta` the rate at which the perturbation dies out.
    """
    if not (0.0 < eta < 1.0 and 0.0 < theta < 1.0):
        raise RateError("eta and theta must lie in (0, 1)")
    le, lt = math.log(eta), math.log(theta)
    lam = lt / (le + lt)
    return lam, math.exp(lam * le)


@dataclass
class RateEquivalence:
    theta_hilbert: float
    theta_thompson: float
    theta_sup: float
    scale: float | None
    max_gap: float
    agree: bool


def rate_equivalence_check(model: MapModel, trace: OrbitTrace, u, r: float,
                           atol: float = 0.05) -> RateEquivalence:
    """Rates of three distance sequences along one orbit.

    * d_H(x_k, u)
    * d_T(f^k(x) / r^k, lam u), lam the limit of M(f^k(x) / r^k / u)
    * |x_k - u|_inf for sup-normalized x_k

    `r` is the eigenvalue; the trace must carry ``growth`` so that
    f^k(x_0) can be rebuilt in log scale without overflow.
    """
    if len(trace.iterates) < 2 or len(trace.growth) + 1 != len(trace.iterates):
        raise RateError("trace does not come from a recorded solve")
    u = np.asarray(u, dtype=float)
    xs = np.array(trace.iterates)
    # log of prod_{i<k} growth_i / r
    log_scale = np.concatenate([[0.0], np.cumsum(np.log(np.asarray(trace.growth) / r))])
    d_h = np.array([hilbert(x, u) for x in xs])
    d_sup = np.max(np.abs(xs - u), axis=1)
    if np.all(d_h == 0):
        return RateEquivalence(0.0, 0.0, 0.0, None, 0.0, True)
    logy = np.log(xs) + log_scale[:, None]
    lam = float(np.exp(np.max(logy[-1] - np.log(u))))
    d_t = np.array([thompson(np.exp(ly), lam * u) for ly in logy])
    thetas = [empirical_rate(pad_distances(d)).theta_hat for d in (d_h, d_t, d_sup)]
    gap = max(thetas) - min(thetas)
    return RateEquivalence(*thetas, lam, gap, gap <= atol)
