"""Seeded property suites behind ``perronrate verify``.

Every property draws from its own substream,
``SeedSequence([seed, suite_index, property_index])``, so one suite's
results do not depend on which other suites run. ``faults`` names
properties whose computation is deliberately corrupted; it exists so tests
can check that a broken estimator is reported by name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from perronrate import topical
from perronrate.cone import hilbert, thompson
from perronrate.eigen import eig_moduli
from perronrate.formats import dumps_spec, parse_spec
from perronrate.iteration import SolveOptions, random_start, solve
from perronrate.maps import (BuiltinMap, Digraph, ExprMap, MapModel, MatrixMap, Max, Min,
                             Monomial, Sum, TensorMap, finite_difference_jacobian, log_conjugate)
from perronrate.rates import combine_rates, empirical_rate, is_primitive, jacobian_rate_bound
from perronrate.structure import classify, has_positive_eigenvector, period, scc

SUITES = ("metrics", "models", "structure", "rates", "topical")
REL = 1e-9


class PropertyFailure(AssertionError):
    pass


def check(cond: bool, msg: str) -> None:
    if not cond:
        raise PropertyFailure(msg)


# ------------------------------------------------------------ generators


def random_matrix(rng, n: int, density: float = 0.7) -> MatrixMap:
    A = rng.uniform(0.1, 2.0, (n, n)) * (rng.random((n, n)) < density)
    A[np.arange(n), rng.integers(0, n, n)] += rng.uniform(0.1, 1.0, n)
    return MatrixMap(A)


def random_tensor(rng, n: int, order: int = 3, nnz: int = 6) -> TensorMap:
    entries = [((i,) + tuple(rng.integers(0, n, order - 1)), rng.uniform(0.1, 2.0))
               for i in range(n)]
    entries += [(tuple(rng.integers(0, n, order)), rng.uniform(0.1, 2.0)) for _ in range(nnz)]
    return TensorMap(order, n, entries)


def random_monomial(rng, n: int) -> Monomial:
    k = int(rng.integers(1, min(n, 3) + 1))
    idx = rng.choice(n, size=k, replace=False)
    w = rng.dirichlet(np.ones(k))
    alpha = np.zeros(n)
    alpha[idx] = w
    alpha[idx[0]] += 1.0 - alpha.sum()
    return Monomial(float(rng.uniform(0.2, 2.0)), tuple(alpha))


def random_expr(rng, n: int, allow_min: bool = True, allow_sum: bool = True) -> ExprMap:
    kinds = [Max] + ([Min] if allow_min else []) + ([Sum] if allow_sum else [])

    def node(depth):
        if depth == 0 or rng.random() < 0.3:
            return random_monomial(rng, n)
        op = kinds[int(rng.integers(len(kinds)))]
        return op(tuple(node(depth - 1) for _ in range(int(rng.integers(2, 4)))))

    return ExprMap([node(2) for _ in range(n)])


def random_model(rng, n: int) -> MapModel:
    """One of the shipped map kinds at dimension `n` (builtins are fixed at 2)."""
    kind = int(rng.integers(4 if n != 2 else 5))
    if kind == 0:
        return random_matrix(rng, n)
    if kind == 1:
        return random_tensor(rng, n, order=int(rng.integers(2, 5)))
    if kind == 2:
        return random_expr(rng, n)
    if kind == 3:
        return random_expr(rng, n, allow_min=False)
    return BuiltinMap(("example1", "example2")[int(rng.integers(2))])


def random_point(rng, n: int, spread: float = 2.0) -> np.ndarray:
    return np.exp(rng.uniform(-spread, spread, n))


# -------------------------------------------------------------- metrics


def p_hilbert_le_2thompson(rng, faults):
    n = int(rng.integers(2, 9))
    x, y = random_point(rng, n), random_point(rng, n)
    dh, dt = hilbert(x, y), thompson(x, y)
    check(dh <= 2 * dt * (1 + REL) + 1e-15, f"d_H={dh} > 2 d_T={2 * dt}")


def p_triangle(rng, faults):
    n = int(rng.integers(2, 9))
    x, y, z = (random_point(rng, n) for _ in range(3))
    for name, d in (("thompson", thompson), ("hilbert", hilbert)):
        lhs, rhs = d(x, z), d(x, y) + d(y, z)
        check(lhs <= rhs * (1 + REL) + 1e-14, f"{name}: {lhs} > {rhs}")


def p_hilbert_scale(rng, faults):
    n = int(rng.integers(2, 9))
    x, y = random_point(rng, n), random_point(rng, n)
    a, b = np.exp(rng.uniform(-5, 5, 2))
    d0, d1 = hilbert(x, y), hilbert(a * x, b * y)
    check(abs(d0 - d1) <= 1e-12 * (1 + d0), f"d_H changed under scaling: {d0} vs {d1}")


PAIRS_PER_MODEL = 5


def p_models_nonexpansive(rng, faults):
    # one random model, several pairs: building expression trees dominates the cost
    n = int(rng.integers(2, 9))
    f = random_model(rng, n)
    for _ in range(PAIRS_PER_MODEL):
        x, y = random_point(rng, n), random_point(rng, n)
        fx, fy = f.evaluate(x), f.evaluate(y)
        for name, d in (("thompson", thompson), ("hilbert", hilbert)):
            before, after = d(x, y), d(fx, fy)
            check(after <= before * (1 + 1e-9) + 1e-12,
                  f"{f.kind} expands {name}: {after} > {before}")


# --------------------------------------------------------------- models


def p_order_preserving(rng, faults):
    n = int(rng.integers(2, 7))
    f = random_model(rng, n)
    x = random_point(rng, n)
    y = x * np.exp(rng.uniform(0, 1, n) * (rng.random(n) < 0.5))
    fx, fy = f.evaluate(x), f.evaluate(y)
    check(np.all(fx <= fy * (1 + 1e-12)), f"{f.kind}: f(x) <= f(y) fails for x <= y")


def p_homogeneous(rng, faults):
    n = int(rng.integers(2, 7))
    f = random_model(rng, n)
    x = random_point(rng, n)
    t = float(np.exp(rng.uniform(-3, 3)))
    err = np.max(np.abs(f.evaluate(t * x) / (t * f.evaluate(x)) - 1))
    check(err <= 1e-10, f"{f.kind}: f(tx) != t f(x), relative error {err:.2e}")


def p_jacobian_fd(rng, faults):
    n = int(rng.integers(2, 6))
    f = random_model(rng, n)
    if not f.analytic:
        f = random_matrix(rng, n) if rng.random() < 0.5 else random_tensor(rng, n)
    x = random_point(rng, n, 1.0)
    J = f.jacobian(x)
    F = finite_difference_jacobian(f, x)
    err = np.max(np.abs(J - F)) / (1 + np.max(np.abs(J)))
    check(err <= 1e-5, f"{f.kind}: Jacobian vs finite differences {err:.2e}")


def p_euler(rng, faults):
    # degree-one homogeneity: J(x) x = f(x) wherever f is differentiable
    n = int(rng.integers(2, 6))
    f = random_matrix(rng, n) if rng.random() < 0.5 else random_tensor(rng, n)
    x = random_point(rng, n)
    err = np.max(np.abs(f.jacobian(x) @ x / f.evaluate(x) - 1))
    check(err <= 1e-10, f"{f.kind}: J(x) x != f(x), relative error {err:.2e}")


def p_spec_round_trip(rng, faults):
    n = int(rng.integers(2, 6))
    f = random_model(rng, n)
    text = dumps_spec(f)
    again = dumps_spec(parse_spec(text).model)
    check(text == again, f"{f.kind}: serialize(parse(doc)) differs from doc")


def p_log_conjugate(rng, faults):
    n = int(rng.integers(2, 6))
    f = random_expr(rng, n, allow_sum=False)
    T = log_conjugate(f)
    y = rng.uniform(-2, 2, n)
    err = np.max(np.abs(T(y) - np.log(f.evaluate(np.exp(y)))))
    check(err <= 1e-10, f"log conjugate mismatch {err:.2e}")
    c = float(rng.uniform(-3, 3))
    err = np.max(np.abs(T(y + c) - T(y) - c))
    check(err <= 1e-10, f"log conjugate not additively homogeneous {err:.2e}")


# ------------------------------------------------------------ structure


def random_digraph(rng, n: int) -> Digraph:
    A = rng.random((n, n)) < rng.uniform(0.1, 0.6)
    return Digraph(n, [(int(i), int(j)) for i, j in zip(*np.nonzero(A))])


def reach(g: Digraph) -> np.ndarray:
    R = g.adjacency().astype(bool) | np.eye(g.n, dtype=bool)
    for k in range(g.n):
        R |= R[:, [k]] & R[[k], :]
    return R


def p_scc_bruteforce(rng, faults):
    g = random_digraph(rng, int(rng.integers(1, 7)))
    R = reach(g)
    comps = scc(g)
    check(sorted(v for c in comps for v in c) == list(range(g.n)), "components do not partition")
    where = {v: i for i, c in enumerate(comps) for v in c}
    for i in range(g.n):
        for j in range(g.n):
            same = bool(R[i, j] and R[j, i])
            check(same == (where[i] == where[j]), f"vertices {i}, {j} misclassified")
            if R[i, j] and not same:
                check(where[i] < where[j], "components not in topological order")


def p_period_minimal(rng, faults):
    g = random_digraph(rng, int(rng.integers(1, 7)))
    A = g.adjacency().astype(bool)
    rec = [v for v in range(g.n) if (A @ reach(g).astype(int))[v, v] > 0]
    if not rec:
        return
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = period(g)
    P = np.eye(g.n, dtype=bool)
    for q in range(1, p + 1):
        P = (P.astype(int) @ A.astype(int)) > 0
        loops = all(P[v, v] for v in rec)
        check(loops == (q == p), f"period {p} is not the smallest power with all loops (q={q})")


def p_existence_two_blocks(rng, faults):
    # top block feeds the bottom one; an eigenvector exists iff r_bottom > r_top
    n1, n2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    B1, B2 = rng.uniform(0.1, 1.0, (n1, n1)), rng.uniform(0.1, 1.0, (n2, n2))
    r1, r2 = eig_moduli(B1)[0], eig_moduli(B2)[0]
    if abs(r1 - r2) < 0.05 * max(r1, r2):
        B2 *= 1.2
        r2 *= 1.2
    A = np.zeros((n1 + n2, n1 + n2))
    A[:n1, :n1], A[n1:, n1:] = B1, B2
    A[:n1, n1:] = rng.uniform(0.1, 1.0, (n1, n2))
    f = MatrixMap(A)
    cert = has_positive_eigenvector(f, classify(f))
    check(cert.exists == (r2 > r1), f"existence verdict {cert.exists} with r_top={r1:.4g}, r_bottom={r2:.4g}")
    if cert.exists:
        res = solve(f, np.ones(n1 + n2), SolveOptions(tolerance=1e-10, max_iters=20000))
        check(res.converged and abs(res.eigenvalue - r2) <= 1e-8 * r2,
              f"solver eigenvalue {res.eigenvalue} vs {r2}")


def p_cw_matches_spectral_radius(rng, faults):
    n = int(rng.integers(1, 6))
    f = random_matrix(rng, n, density=1.0)
    rho = eig_moduli(f.A)[0]
    r = classify(f).r_global
    check(abs(r - rho) <= 1e-8 * rho, f"CW number {r} vs spectral radius {rho}")


# ---------------------------------------------------------------- rates


def p_combine_identity(rng, faults):
    eta, theta = rng.uniform(0.01, 0.99, 2)
    lam, rate = combine_rates(eta, theta)
    check(abs(eta ** lam - theta ** (1 - lam)) <= 1e-12, "eta^lam != theta^(1-lam)")
    # lam lies in (0, 1), so the combined rate is slower than either input
    check(max(eta, theta) <= rate + 1e-15 and rate < 1.0, "combined rate outside [max(eta, theta), 1)")


def p_theta_recovery(rng, faults):
    theta = float(rng.uniform(0.1, 0.95))
    c = float(np.exp(rng.uniform(-2, 2)))
    k = np.arange(400)
    d = c * theta ** k * (1 + 0.1 * np.sin(k))
    est = empirical_rate(d)
    got = est.theta_hat * (1.5 if "rates.theta_recovery" in faults else 1.0)
    check(abs(got - theta) <= 0.02, f"theta_hat {got:.4f} for true theta {theta:.4f}")
    check(est.classification == "linear", f"classified {est.classification}")


def p_sublinear_detected(rng, faults):
    power = float(rng.uniform(0.5, 3.0))
    k = np.arange(1, 2001)  # tail ratios are about 1 - power/k, so k must be large
    est = empirical_rate(float(np.exp(rng.uniform(-1, 1))) * k ** -power)
    check(est.classification == "sublinear", f"k^-{power:.2f} classified {est.classification}")


def p_primitive_bound(rng, faults):
    n = int(rng.integers(2, 5))
    f = MatrixMap(rng.uniform(0.1, 1.0, (n, n)))
    res = solve(f, random_start(rng, n), SolveOptions(tolerance=1e-14, record_trace=True))
    sb = jacobian_rate_bound(f, res.eigenvector)
    check(sb.bound is not None, "positive matrix not recognised as primitive")
    d = [hilbert(x, res.eigenvector) for x in res.trace.iterates]
    if len(d) < 20 or max(d) < 1e-10:
        return
    est = empirical_rate(d)
    check(est.theta_hat <= sb.bound + 0.05, f"theta_hat {est.theta_hat:.4f} > bound {sb.bound:.4f}")


def p_primitive_digraph(rng, faults):
    g = random_digraph(rng, int(rng.integers(1, 6)))
    A = g.adjacency().astype(int)
    P, prim = np.eye(g.n, dtype=int), False
    for _ in range((g.n - 1) ** 2 + 1):
        P = np.minimum(P @ A, 1)
    prim = bool(np.all(P > 0))
    check(is_primitive(g) == prim, f"is_primitive={is_primitive(g)} but powering says {prim}")


# -------------------------------------------------------------- topical


def p_topical_axioms(rng, faults):
    kind = ("mdp", "minmax")[int(rng.integers(2))]
    F, _ = topical.random_topical(rng, n=int(rng.integers(2, 6)), kind=kind)
    x = rng.uniform(-3, 3, F.dim)
    y = rng.uniform(-3, 3, F.dim)
    c = float(rng.uniform(-5, 5))
    check(np.max(np.abs(F(x + c) - F(x) - c)) <= 1e-10, "not additively homogeneous")
    z = np.maximum(x, y)
    check(np.all(F(x) <= F(z) + 1e-12), "not monotone")
    check(np.max(np.abs(F(x) - F(y))) <= np.max(np.abs(x - y)) + 1e-12, "expands the sup norm")


def p_km_fixed_point(rng, faults):
    kind = ("mdp", "minmax")[int(rng.integers(2))]
    F, u = topical.random_topical(rng, n=3, kind=kind)
    res = topical.km_fixed_point(F, rng.uniform(-2, 2, 3), tol=1e-11)
    check(res.converged, "Krasnoselskii-Mann iteration did not converge")
    check(np.max(np.abs(F(res.fixed_point) - res.fixed_point)) <= 1e-9, "limit is not a fixed point")


def p_local_linear(rng, faults):
    kind = ("mdp", "minmax")[int(rng.integers(2))]
    F, u = topical.random_topical(rng, n=3, kind=kind)
    G = topical.AveragedMap(F)
    x0 = rng.uniform(-2, 2, 3)
    res = topical.km_fixed_point(F, x0, tol=1e-12)
    check(res.converged, "no fixed point found")
    ll = topical.verify_local_linear(G, res.fixed_point, x0)
    check(ll.m <= 256 and ll.gamma < 1, f"m={ll.m}, gamma={ll.gamma}")


def _kohlberg_example():
    return topical.MinMaxMap([
        topical.Max((topical.Affine((1.0, 0.0), 2.0), topical.Affine((0.0, 1.0), 0.0))),
        topical.Max((topical.Affine((1.0, 0.0), 0.0), topical.Affine((0.0, 1.0), 1.0))),
    ])


def p_reduction_identity(rng, faults):
    F = _kohlberg_example()
    w = np.array([2.0, 2.0])
    G = topical.reduce_by_half_line(F, w)
    x = rng.uniform(-5, 5, 2)
    m = topical.reduction_offset(F, w, x)
    y = topical.iterate(F, x, m)
    for k in range(21):
        lhs = topical.iterate(F, x, k + m)
        rhs = topical.iterate(G, y, k) + k * w
        check(np.max(np.abs(lhs - rhs)) <= 1e-8, f"identity fails at k={k}, m={m}")


# ---------------------------------------------------------------- runner


@dataclass(frozen=True)
class Property:
    name: str
    func: Callable
    trials: int


PROPERTIES: dict[str, tuple[Property, ...]] = {
    "metrics": (
        Property("hilbert_le_2thompson", p_hilbert_le_2thompson, 10000),
        Property("triangle_inequality", p_triangle, 10000),
        Property("hilbert_scale_invariance", p_hilbert_scale, 10000),
        Property("models_nonexpansive", p_models_nonexpansive, 10000 // PAIRS_PER_MODEL),
    ),
    "models": (
        Property("order_preserving", p_order_preserving, 500),
        Property("homogeneous", p_homogeneous, 500),
        Property("jacobian_vs_finite_differences", p_jacobian_fd, 200),
        Property("euler_identity", p_euler, 200),
        Property("spec_round_trip", p_spec_round_trip, 200),
        Property("log_conjugate", p_log_conjugate, 200),
    ),
    "structure": (
        Property("scc_vs_reachability", p_scc_bruteforce, 500),
        Property("period_minimal", p_period_minimal, 500),
        Property("existence_two_blocks", p_existence_two_blocks, 100),
        Property("cw_number_is_spectral_radius", p_cw_matches_spectral_radius, 100),
    ),
    "rates": (
        Property("combine_rates_identity", p_combine_identity, 2500),
        Property("theta_recovery", p_theta_recovery, 200),
        Property("sublinear_detected", p_sublinear_detected, 200),
        Property("primitive_bound", p_primitive_bound, 100),
        Property("primitive_vs_powering", p_primitive_digraph, 300),
    ),
    "topical": (
        Property("topical_axioms", p_topical_axioms, 500),
        Property("km_fixed_point", p_km_fixed_point, 50),
        Property("local_linear_rate", p_local_linear, 30),
        Property("half_line_reduction", p_reduction_identity, 20),
    ),
}


@dataclass
class PropertyResult:
    suite: str
    name: str
    trials: int
    failures: int = 0
    first_failure: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class VerifyReport:
    seed: int
    results: list[PropertyResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def summary_lines(self) -> list[str]:
        lines = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            line = f"{status} {r.suite}.{r.name}: {r.trials - r.failures}/{r.trials}"
            if r.first_failure:
                line += f"  first failure: {r.first_failure}"
            lines.append(line)
        n_fail = sum(not r.passed for r in self.results)
        lines.append(f"{len(self.results) - n_fail} of {len(self.results)} properties passed (seed {self.seed})")
        return lines

    def to_dict(self) -> dict:
        return {"seed": self.seed, "passed": self.passed,
                "properties": [{"suite": r.suite, "name": r.name, "trials": r.trials,
                                "failures": r.failures, "first_failure": r.first_failure}
                               for r in self.results]}


def run_property(suite: str, index: int, prop: Property, seed: int, faults=frozenset(),
                 trials: int | None = None) -> PropertyResult:
    ss = np.random.SeedSequence([seed, SUITES.index(suite), index])
    rng = np.random.default_rng(ss)
    n = prop.trials if trials is None else trials
    out = PropertyResult(suite, prop.name, n)
    for t in range(n):
        try:
            prop.func(rng, faults)
        except Exception as exc:  # any exception counts against the property
            out.failures += 1
            if not out.first_failure:
                kind = "" if isinstance(exc, PropertyFailure) else f"{type(exc).__name__}: "
                out.first_failure = f"trial {t}: {kind}{exc}"
    return out


def run_suites(suites, seed: int = 0, faults=frozenset(), scale: float = 1.0) -> VerifyReport:
    """Run the named suites (``"all"`` expands to every suite).

    `scale` multiplies every trial count, for quick runs.
    """
    names = SUITES if "all" in suites else tuple(s for s in SUITES if s in suites)
    unknown = set(suites) - set(SUITES) - {"all"}
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(sorted(unknown))}")
    rep = VerifyReport(seed)
    for s in names:
        for i, prop in enumerate(PROPERTIES[s]):
            n = max(1, int(math.ceil(prop.trials * scale)))
            rep.results.append(run_property(s, i, prop, seed, frozenset(faults), n))
    return rep
