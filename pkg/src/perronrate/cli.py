"""Command-line front end: ``perronrate {analyze,solve,rate,topical,repro,verify}``.

Exit codes: 0 success, 2 parse or validation error, 3 non-convergence,
4 property failure or reproduction mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from perronrate import __version__, topical
from perronrate.cone import ConeError
from perronrate.formats import ParseError, load_spec
from perronrate.iteration import SolveOptions
from perronrate.maps import ExprMap, ModelError, log_conjugate
from perronrate.reports import (FAILED, OK, PARSE, ReportError, run_analyze, run_rate,
                                run_repro, run_solve, run_topical)
from perronrate.verify import SUITES, run_suites


def _vector(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("text", "json"), default="text")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings")

    iterate = argparse.ArgumentParser(add_help=False)
    iterate.add_argument("file", help="map-spec document (JSON)")
    iterate.add_argument("--tol", type=float, default=None, help="stop when d_H(x, f(x)) < tol")
    iterate.add_argument("--max-iters", type=int, default=None)
    iterate.add_argument("--damping", type=float, default=None,
                         help="use x <- normalize(lam f(x)/M + (1 - lam) x)")
    iterate.add_argument("--start", type=_vector, default=None,
                         help="start vector, comma separated (default: random from --seed)")
    iterate.add_argument("--seed", type=int, default=0)
    iterate.add_argument("--trace-out", default=None, help="write the orbit as CSV")

    p = argparse.ArgumentParser(prog="perronrate", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"perronrate {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="classes, existence, type K, period")
    a.add_argument("file")

    sub.add_parser("solve", parents=[common, iterate], help="eigenvector by power iteration")
    sub.add_parser("rate", parents=[common, iterate], help="empirical and certified rates")

    t = sub.add_parser("topical", parents=[common], help="topical (log-coordinate) maps")
    t.add_argument("action", choices=("km", "cycle-time", "half-line"))
    t.add_argument("file", help="topical or expr map-spec document")
    t.add_argument("--start", type=_vector, default=None, help="start point (default: 0)")
    t.add_argument("-K", "--steps", type=int, default=1000, help="steps for F^K(x)/K")
    t.add_argument("--v", type=_vector, default=None, help="half-line base point")
    t.add_argument("--w", type=_vector, default=None, help="half-line direction")
    t.add_argument("--tol", type=float, default=1e-10)
    t.add_argument("--max-iters", type=int, default=100_000)

    r = sub.add_parser("repro", parents=[common], help="reproduce the sublinear examples")
    r.add_argument("which", choices=("example1", "example2"))

    v = sub.add_parser("verify", parents=[common], help="seeded property suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--scale", type=float, default=1.0, help="multiply every trial count")
    v.add_argument("--inject-fault", action="append", default=[], help=argparse.SUPPRESS)
    return p


def _solve_options(args) -> SolveOptions:
    defaults = {"solve": (1e-10, 100_000), "rate": (1e-14, 5000)}[args.command]
    return SolveOptions(tolerance=args.tol if args.tol is not None else defaults[0],
                        max_iters=args.max_iters if args.max_iters is not None else defaults[1],
                        damping=args.damping, seed=args.seed)


def _options(args) -> dict:
    skip = {"output", "timings", "command", "file", "inject_fault"}
    out = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if "file" in vars(args):
        out["file"] = args.file
    return out


def _topical_map(spec) -> topical.TopicalMap:
    if isinstance(spec.model, topical.TopicalMap):
        return spec.model
    if isinstance(spec.model, ExprMap):
        return log_conjugate(spec.model)
    raise ReportError(f"topical commands need a topical or expr document, got {spec.kind}")


def run(args) -> tuple[str, int]:
    if args.command == "verify":
        t0 = time.perf_counter()
        rep = run_suites([args.suite], seed=args.seed, faults=frozenset(args.inject_fault),
                         scale=args.scale)
        code = OK if rep.passed else FAILED
        if args.output == "json":
            d = rep.to_dict()
            if args.timings:
                d["timings"] = {"total_s": time.perf_counter() - t0}
            return json.dumps(d, indent=2, sort_keys=True) + "\n", code
        lines = rep.summary_lines()
        if args.timings:
            lines.append(f"total {time.perf_counter() - t0:.2f} s")
        return "\n".join(lines) + "\n", code

    if args.command == "repro":
        rep, code = run_repro(args.which)
    else:
        spec = load_spec(args.file)
        options = _options(args)
        if args.command == "analyze":
            rep, code = run_analyze(spec.model, options)
        elif args.command == "topical":
            F = _topical_map(spec)
            rep, code = run_topical(F, args.action, args.start, args.steps, args.v, args.w,
                                    args.tol, args.max_iters, options,
                                    source=spec.model)
        else:
            if isinstance(spec.model, topical.TopicalMap):
                raise ReportError("solve and rate need an orthant map; use 'topical' instead")
            opts = _solve_options(args)
            runner = run_solve if args.command == "solve" else run_rate
            rep, code = runner(spec.model, opts, args.start, trace_out=args.trace_out,
                               options=options)
    if not args.timings:
        rep.timings = None
    return (rep.to_json() if args.output == "json" else rep.to_text()), code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, code = run(args)
    except (ParseError, ReportError, ModelError, ConeError, topical.TopicalError) as exc:
        print(f"perronrate: error: {exc}", file=sys.stderr)
        return PARSE
    except ValueError as exc:
        print(f"perronrate: invalid input: {exc}", file=sys.stderr)
        return PARSE
    except OSError as exc:
        print(f"perronrate: {exc}", file=sys.stderr)
        return PARSE
    sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
