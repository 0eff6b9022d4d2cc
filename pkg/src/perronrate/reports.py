"""Run reports for the command-line front end.

Each ``run_*`` function takes an already-loaded model and returns a
:class:`RunReport` plus a status; the CLI maps statuses to exit codes.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from perronrate import __version__
from perronrate import topical
from perronrate.cone import hilbert, thompson
from perronrate.eigen import eig_moduli
from perronrate.formats import dumps_spec
from perronrate.iteration import SolveOptions, SolveResult, random_start, solve
from perronrate.maps import BuiltinMap, Digraph, MapModel, NondifferentiableError
from perronrate.rates import (RateError, RateReport, combine_rates, empirical_rate,
                              is_primitive, jacobian_rate_bound, pad_distances,
                              rate_equivalence_check)
from perronrate.structure import (CWError, StructureWarning, classify, has_positive_eigenvector,
                                  is_type_k, period, recurrent_vertices)

OK, PARSE, NOCONV, FAILED = 0, 2, 3, 4


class ReportError(ValueError):
    pass


def _clean(v):
    """JSON-ready copy; numpy scalars/arrays become floats/lists, -0.0 becomes 0.0."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise ReportError(f"non-finite number in report: {v}")
        return v + 0.0
    return v


@dataclass
class RunReport:
    command: str
    input_digest: str
    options: dict
    sections: dict = field(default_factory=dict)
    status: str = "ok"
    warnings: list = field(default_factory=list)
    timings: dict | None = None
    version: str = __version__

    def to_dict(self) -> dict:
        d = {"version": self.version, "command": self.command, "status": self.status,
             "input_digest": self.input_digest, "options": self.options,
             **self.sections, "warnings": self.warnings}
        if self.timings is not None:
            d["timings"] = self.timings
        return _clean(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"perronrate {self.version} {self.command}: {self.status}"]
        _text(self.to_dict(), lines, 0, skip={"version", "command", "status"})
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _text(d: dict, lines: list, depth: int, skip=()) -> None:
    pad = "  " * depth
    for k, v in d.items():
        if k in skip:
            continue
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            _text(v, lines, depth + 1)
        elif isinstance(v, list) and v and all(isinstance(x, dict) for x in v):
            lines.append(f"{pad}{k}:")
            for i, x in enumerate(v):
                lines.append(f"{pad}  - [{i}]")
                _text(x, lines, depth + 2)
        else:
            lines.append(f"{pad}{k}: {_fmt(v)}")


def digest(model) -> str:
    return hashlib.sha256(dumps_spec(model).encode()).hexdigest()


def one_based(vertices) -> list[int]:
    return [int(v) + 1 for v in vertices]


# ------------------------------------------------------------------ analyze


def structure_section(model: MapModel) -> tuple[dict, list[str]]:
    notes: list[str] = []
    g = model.digraph()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StructureWarning)
        try:
            dec = classify(model, g)
        except CWError as exc:
            return {"error": str(exc)}, [str(exc)]
        cert = has_positive_eigenvector(model, dec)
        p = period(g)
    notes.extend(str(w.message) for w in caught)
    classes = []
    for comp, fin, cw, bas in zip(dec.classes, dec.is_final, dec.cw, dec.is_basic):
        classes.append({"vertices": one_based(comp), "final": fin, "basic": bas,
                        "cw_number": cw.value, "cw_bracket": [cw.lower, cw.upper],
                        "cw_converged": cw.converged})
    sec = {
        "dim": model.dim,
        "kind": model.kind,
        "arcs": sorted([i + 1, j + 1] for i, j in g.arcs),
        "strongly_connected": len(dec.classes) == 1,
        "classes": classes,
        "r": dec.r_global,
        "basic_classes": [one_based(c) for c in cert.basic],
        "final_classes": [one_based(c) for c in cert.final],
        "positive_eigenvector_exists": cert.exists,
        "existence_exact": cert.exact,
        "type_k": is_type_k(model, g),
        "period": p,
        "recurrent_vertices": one_based(recurrent_vertices(g)),
        "multiplicatively_convex": model.multiplicatively_convex,
        "analytic": model.analytic,
    }
    return sec, notes


def run_analyze(model: MapModel, options: dict | None = None) -> tuple[RunReport, int]:
    t0 = time.perf_counter()
    sec, notes = structure_section(model)
    rep = RunReport("analyze", digest(model), options or {}, {"structure": sec}, warnings=notes)
    rep.timings = {"total_s": time.perf_counter() - t0}
    if "error" in sec:
        rep.status = "failed"
        return rep, FAILED
    return rep, OK


# -------------------------------------------------------------------- solve


def start_vector(model: MapModel, start=None, seed: int = 0) -> np.ndarray:
    """The explicit start if given, else exp(uniform[-1, 1]^n) drawn from `seed`.

    A random default matters: the all-ones vector is a fixed point of every
    permutation matrix and would hide periodic orbits.
    """
    if start is not None:
        x = np.asarray(start, dtype=float)
        if x.size != model.dim:
            raise ReportError(f"start vector has {x.size} entries, map has dim {model.dim}")
        return x
    return random_start(np.random.default_rng(seed), model.dim)


def solve_section(res: SolveResult) -> dict:
    lo, hi = res.eigenvalue_bracket
    sec = {"converged": res.converged, "iterations": res.iterations,
           "eigenvector": res.eigenvector}
    if math.isfinite(lo) and math.isfinite(hi):
        sec["eigenvalue_bracket"] = [lo, hi]
        sec["eigenvalue"] = res.eigenvalue
    if res.period_detected is not None:
        sec["period_detected"] = res.period_detected
    if res.diagnostic:
        sec["diagnostic"] = res.diagnostic
    return sec


def run_solve(model: MapModel, opts: SolveOptions, start=None,
              trace_out=None, options: dict | None = None) -> tuple[RunReport, int]:
    t0 = time.perf_counter()
    x0 = start_vector(model, start, opts.seed)
    if trace_out is not None and not opts.record_trace:
        opts = SolveOptions(opts.tolerance, opts.max_iters, opts.damping, True, opts.seed, opts.window)
    res = solve(model, x0, opts)
    if trace_out is not None:
        res.trace.write_csv(trace_out)
    rep = RunReport("solve", digest(model), options or {}, {"solve": solve_section(res)})
    rep.timings = {"total_s": time.perf_counter() - t0}
    if not res.converged:
        rep.status = "not converged"
        return rep, NOCONV
    return rep, OK


# --------------------------------------------------------------------- rate


def _block_ratio(J: np.ndarray, comp) -> tuple[float, bool]:
    idx = list(comp)
    B = J[np.ix_(idx, idx)]
    if len(idx) == 1:
        return 0.0, True
    mod = eig_moduli(B)
    return float(mod[1] / mod[0]), is_primitive(Digraph.from_matrix(B))


def _rate_dict(rep: RateReport) -> dict:
    return {k: v for k, v in rep.to_dict().items() if v is not None}


def run_rate(model: MapModel, opts: SolveOptions, start=None,
             options: dict | None = None, trace_out=None) -> tuple[RunReport, int]:
    """Empirical rate of the normalized orbit plus Jacobian-based bounds.

    Orbits that have not reached the tolerance are rated from their step
    residuals d_H(x_k, f(x_k)), which is how sublinear examples are caught.
    """
    t0 = time.perf_counter()
    x0 = start_vector(model, start, opts.seed)
    opts = SolveOptions(opts.tolerance, opts.max_iters, opts.damping, True, opts.seed, opts.window)
    res = solve(model, x0, opts)
    if trace_out is not None:
        res.trace.write_csv(trace_out)
    sections: dict[str, Any] = {"solve": solve_section(res)}
    notes: list[str] = []
    rep = RunReport("rate", digest(model), options or {}, sections, warnings=notes)
    trace = res.trace
    if not res.converged:
        if res.period_detected is not None or "cone" in res.diagnostic:
            rep.status = "not converged"
            rep.timings = {"total_s": time.perf_counter() - t0}
            return rep, NOCONV
        resid = [math.log(M / m) for M, m in zip(trace.max_ratio, trace.min_ratio)]
        rr = empirical_rate(pad_distances(resid))
        sections["rate"] = {"basis": "step residuals (limit not reached)", **_rate_dict(rr)}
        u_guess = res.eigenvector
        try:
            sb = jacobian_rate_bound(model, u_guess, residual_tol=1e-3)
            sections["rate"]["jacobian_ratio_near_limit"] = sb.ratio
        except (RateError, NondifferentiableError):
            pass
        sections["rate"]["no_certificate"] = "limit not reached"
        notes.append("orbit has not converged; rate estimated from step residuals")
        rep.timings = {"total_s": time.perf_counter() - t0}
        return rep, OK

    u = res.eigenvector
    r = res.eigenvalue
    d_h = pad_distances([hilbert(x, u) for x in trace.iterates])
    rr = empirical_rate(d_h)
    rate_sec: dict[str, Any] = {"basis": "d_H(x_k, u)", **_rate_dict(rr)}
    try:
        eq = rate_equivalence_check(model, trace, u, r)
        rate_sec["equivalence"] = {"theta_hilbert": eq.theta_hilbert,
                                   "theta_thompson": eq.theta_thompson,
                                   "theta_sup": eq.theta_sup, "max_gap": eq.max_gap,
                                   "agree": eq.agree}
        if eq.scale is not None:
            rate_sec["equivalence"]["scale"] = eq.scale
    except RateError as exc:
        notes.append(f"rate equivalence skipped: {exc}")
    try:
        sb = jacobian_rate_bound(model, u)
        rate_sec["jacobian_ratio"] = sb.ratio
        if sb.bound is not None:
            rate_sec["theoretical_bound"] = sb.bound
        else:
            rate_sec["no_certificate"] = sb.reason
        J = model.jacobian(u)
    except (RateError, NondifferentiableError) as exc:
        rate_sec["no_certificate"] = str(exc)
        J = None
    sections["rate"] = rate_sec

    if J is not None:
        g = model.digraph()
        from perronrate.structure import scc
        comps = scc(g)
        if len(comps) > 1:
            sections["classes"] = _class_rates(model, g, comps, trace, u, r, J, notes)
    rep.timings = {"total_s": time.perf_counter() - t0}
    return rep, OK


def _class_rates(model, g, comps, trace, u, r, J, notes) -> dict:
    where = {v: ci for ci, c in enumerate(comps) for v in c}
    final = [True] * len(comps)
    for i, j in g.arcs:
        if where[i] != where[j]:
            final[where[i]] = False
    per_class = []
    thetas = []
    xs = np.array(trace.iterates)
    for comp, fin in zip(comps, final):
        idx = list(comp)
        d = [hilbert(x[idx], u[idx]) for x in xs] if len(idx) > 1 else [0.0] * len(xs)
        est = empirical_rate(pad_distances(d))
        ratio, prim = _block_ratio(J, comp)
        entry = {"vertices": one_based(comp), "final": fin, "theta_hat": est.theta_hat,
                 "block_ratio": ratio, "block_primitive": prim}
        per_class.append(entry)
        if fin:
            thetas.append(ratio)
    out: dict[str, Any] = {"per_class": per_class}
    I = [v for comp, fin in zip(comps, final) if not fin for v in comp]
    if I:
        eta = float(eig_moduli(J[np.ix_(I, I)])[0] / r)
        theta_j = max(thetas) if thetas else 0.0
        out["eta"] = eta
        out["theta_final"] = theta_j
        if 0.0 < eta < 1.0 and 0.0 < theta_j < 1.0:
            lam, rate = combine_rates(eta, theta_j)
        elif eta == 0.0 and theta_j < 1.0:
            lam, rate = 0.0, theta_j
        elif theta_j == 0.0 and eta < 1.0:
            lam, rate = 1.0, eta
        else:
            lam = rate = None
            notes.append("block rates outside (0, 1); no combined rate")
        if rate is not None:
            out["lambda_combined"] = lam
            out["combined_rate"] = rate
    return out


# -------------------------------------------------------------------- repro


REPRO_STARTS = {"example1": (-1.0, 1.0), "example2": (-1.0, 0.0)}


def repro_orbit(which: str, steps: int) -> np.ndarray:
    """Raw iterates f^k(x) for k = 0..steps from the example's start point."""
    f = BuiltinMap(which)
    x = np.exp(np.array(REPRO_STARTS[f.tag]))
    out = [x]
    for _ in range(steps):
        x = f.evaluate(x)
        out.append(x)
    return np.array(out)


def arctan_iterates(steps: int) -> np.ndarray:
    a = [1.0]
    for _ in range(steps):
        a.append(math.atan(a[-1]))
    return np.array(a)


def run_repro(which: str, check_steps: int = 30, steps: int = 200,
              atol: float = 1e-9) -> tuple[RunReport, int]:
    t0 = time.perf_counter()
    f = BuiltinMap(which)
    orbit = repro_orbit(f.tag, steps)
    a = arctan_iterates(steps)
    if f.tag == "example1":
        expected = np.column_stack([np.exp(-a), np.exp(a)])
    else:
        expected = np.column_stack([np.exp(-a), np.ones_like(a)])
    err = float(np.max(np.abs(orbit[: check_steps + 1] - expected[: check_steps + 1])))
    d_t = np.array([thompson(x, np.ones(2)) for x in orbit])
    d_err = float(np.max(np.abs(d_t[: check_steps + 1] - a[: check_steps + 1])))
    rr = empirical_rate(d_t[1:])
    ok = err <= atol and d_err <= atol and rr.classification == "sublinear"
    sec = {"map": f.tag, "start": np.exp(REPRO_STARTS[f.tag]), "checked_steps": check_steps,
           "max_iterate_error": err, "max_thompson_error": d_err,
           "thompson_distances_head": d_t[:4], "rate": _rate_dict(rr),
           "formula_holds": err <= atol and d_err <= atol}
    rep = RunReport("repro", digest(f), {"which": f.tag}, {"repro": sec})
    rep.timings = {"total_s": time.perf_counter() - t0}
    if not ok:
        rep.status = "regression"
        return rep, FAILED
    return rep, OK


# ------------------------------------------------------------------ topical


def run_topical(F: topical.TopicalMap, action: str, x0=None, K: int = 1000, v=None, w=None,
                tol: float = 1e-10, max_iters: int = 100_000,
                options: dict | None = None, source=None) -> tuple[RunReport, int]:
    """``source`` is the document model ``F`` was derived from, used for the digest."""
    t0 = time.perf_counter()
    x0 = np.zeros(F.dim) if x0 is None else np.asarray(x0, dtype=float)
    sec: dict[str, Any] = {"dim": F.dim, "action": action}
    code = OK
    if action == "km":
        res = topical.km_fixed_point(F, x0, tol=tol, max_iters=max_iters)
        sec.update(converged=res.converged, iterations=res.iterations, residual=res.residual)
        if res.converged:
            sec["fixed_point"] = res.fixed_point
            try:
                ll = topical.verify_local_linear(topical.AveragedMap(F), res.fixed_point, x0)
                sec["local_linear"] = {"m": ll.m, "gamma": ll.gamma}
            except topical.TopicalError as exc:
                sec["local_linear"] = {"error": str(exc)}
        else:
            sec["cycle_time_estimate"] = res.cycle_time
            code = NOCONV
    elif action == "cycle-time":
        sec["K"] = K
        sec["cycle_time"] = topical.cycle_time(F, x0, K)
    elif action == "half-line":
        if w is None:
            w = np.round(topical.cycle_time(F, x0, K), 6)
        w = np.asarray(w, dtype=float)
        sec["w"] = w
        if v is not None:
            h = topical.HalfLine(np.asarray(v, dtype=float), w)
            ok = topical.half_line_check(F, h)
        else:
            found = topical.find_half_line(F, w, x0)
            ok = found is not None
            if found is not None:
                v = found.v
        sec["half_line_verified"] = ok
        if v is not None:
            sec["v"] = v
        try:
            sec["reduction_m"] = topical.reduction_offset(F, w, x0)
        except topical.ReductionError as exc:
            sec["reduction_error"] = str(exc)
        if not ok:
            code = FAILED
    else:
        raise ReportError(f"unknown topical action {action!r}")
    rep = RunReport("topical", digest(source if source is not None else F),
                    options or {}, {"topical": sec})
    if code == NOCONV:
        rep.status = "not converged"
    elif code == FAILED:
        rep.status = "failed"
    rep.timings = {"total_s": time.perf_counter() - t0}
    return rep, code
