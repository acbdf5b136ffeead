"""Command-line interface: ``qfim {compute,sld,compare,bench,bures}``.

Exit codes: 0 success, 2 malformed input or usage, 3 numerical failure
(singularity, divergence, non-convergence), 4 methods disagree in ``compare``.
"""

import argparse
import sys
import warnings

import numpy as np

from . import io as qio
from .bench import rows_to_csv, run_bench, summarize
from .exceptions import DiscontinuityWarning, QfimError
from .metrology import cramer_rao
from .solvers import (
    MethodChoice,
    NuSchedule,
    Quadrature,
    bures_infinitesimal,
    compare_methods,
    compute,
    compute_unitary,
)
from .states import DerivativeSet

EXIT_OK, EXIT_USAGE, EXIT_MATH, EXIT_DISAGREE = 0, 2, 3, 4

METHOD_CHOICES = ["auto", "vectorized", "eigen", "eigen-matrix", "integral", "regularized", "pseudoinverse"]


class UsageError(Exception):
    pass


def _add_global(p, suppress):
    kw = {"default": argparse.SUPPRESS} if suppress else {}

    def d(val):
        return kw or {"default": val}

    p.add_argument("--method", choices=METHOD_CHOICES, help="QFIM route (default: auto)", **d("auto"))
    p.add_argument("--tol", type=float, help="relative convergence tolerance of the nu-limit (default 1e-7)", **d(None))
    p.add_argument("--nu0", type=float, help="first regularization weight (default 1e-3)", **d(None))
    p.add_argument("--nu-ratio", type=float, help="geometric ratio of the nu schedule (default 0.1)", **d(None))
    p.add_argument("--nu-steps", type=int, help="maximum nu steps (default 6)", **d(None))
    p.add_argument("--quad-nodes", type=int, help="Gauss-Legendre nodes per panel (default 16)", **d(None))
    p.add_argument("--sld", action="store_true", help="include SLDs in the result", **d(False))
    p.add_argument("--crb", action="store_true", help="append the Cramer-Rao report", **d(False))
    p.add_argument("--output", "-o", help="write the result to this path instead of stdout", **d(None))
    p.add_argument("--seed", type=int, help="random seed for bench (default 0)", **d(0))


def build_parser():
    parser = argparse.ArgumentParser(prog="qfim", description=__doc__.splitlines()[0])
    _add_global(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, hlp in (("compute", "compute the QFIM"), ("sld", "compute the QFIM and SLDs")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("input", help="problem file (JSON)")
        _add_global(p, suppress=True)

    p = sub.add_parser("compare", help="run every method and cross-check")
    p.add_argument("input")
    p.add_argument("--format", choices=["text", "json"], default="text")
    _add_global(p, suppress=True)

    p = sub.add_parser("bench", help="time every method on random full-rank states (CSV)")
    p.add_argument("--dims", default="2,4,8,16", help="comma-separated Hilbert-space dimensions")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--params", type=int, default=2, help="parameters per instance")
    p.add_argument("--methods", default=None, help="comma-separated subset of methods")
    _add_global(p, suppress=True)

    p = sub.add_parser("bures", help="squared infinitesimal Bures distance for a parameter step")
    p.add_argument("input")
    p.add_argument("--deps", required=True, help="comma-separated parameter increments")
    _add_global(p, suppress=True)
    return parser


def _choice(args):
    sched = {}
    for key, attr in (("nu0", "nu0"), ("ratio", "nu_ratio"), ("max_steps", "nu_steps"), ("tol", "tol")):
        val = getattr(args, attr)
        if val is not None:
            sched[key] = val
    quad = {"nodes": args.quad_nodes} if args.quad_nodes is not None else {}
    try:
        return MethodChoice(args.method, NuSchedule(**sched), Quadrature(**quad))
    except QfimError as exc:
        raise UsageError(str(exc)) from exc


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load(args):
    problem = qio.load_problem(args.input)
    return problem, qio.resolve(problem)


def _run_compute(args, force_sld=False):
    choice = _choice(args)
    problem, resolved = _load(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DiscontinuityWarning)
        if resolved[0] == "unitary":
            res = compute_unitary(resolved[1], choice)
        else:
            res = compute(resolved[1], resolved[2], choice)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    crb = cramer_rao(res, problem.parameter_names) if args.crb else None
    doc = qio.result_to_dict(res, problem.parameter_names, include_slds=force_sld or args.sld, crb=crb)
    _emit(qio.dumps(doc), args.output)
    return EXIT_OK


def _state_inputs(resolved):
    if resolved[0] == "unitary":
        enc = resolved[1]
        return enc.initial_state, DerivativeSet(enc.generator_derivatives())
    return resolved[1], resolved[2]


def _run_compare(args):
    choice = _choice(args)
    problem, resolved = _load(args)
    rho, d = _state_inputs(resolved)
    cmp = compare_methods(rho, d, choice)
    if args.format == "json" or args.output:
        doc = qio._jsonable(cmp.to_dict())
        doc["parameter_names"] = problem.parameter_names
        _emit(qio.dumps(doc), args.output)
    if args.format == "text":
        lines = [f"{'method':20s} {'time [ms]':>10s}  qfim"]
        for m, r in cmp.results.items():
            lines.append(f"{m:20s} {cmp.timings[m] * 1e3:10.3f}  {np.array2string(r.h, precision=10)}")
        for m, err in cmp.errors.items():
            lines.append(f"{m:20s} {cmp.timings[m] * 1e3:10.3f}  FAILED {err}")
        lines.append("")
        lines.append(f"pairwise relative deviations (tolerance {cmp.tol:g}):")
        for (a, b), dev in cmp.deviations.items():
            flag = "  <-- exceeds tolerance" if dev > cmp.tol else ""
            lines.append(f"  {a} vs {b}: {dev:.3e}{flag}")
        lines.append("agreement: " + ("PASS" if cmp.ok else "FAIL"))
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if cmp.ok else EXIT_DISAGREE


def _parse_list(text, conv, name):
    try:
        return [conv(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--{name}: {exc}") from exc


def _run_bench(args):
    dims = _parse_list(args.dims, int, "dims")
    if args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")
    if not dims or any(d < 2 for d in dims):
        raise UsageError(f"--dims must be integers >= 2, got {args.dims}")
    methods = _parse_list(args.methods, str, "methods") if args.methods else None
    kw = {"methods": methods} if methods else {}
    try:
        rows = run_bench(dims, args.trials, args.seed, n_params=args.params, choice=_choice(args), **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(rows_to_csv(rows), args.output)
    print(summarize(rows), file=sys.stderr)
    return EXIT_OK


def _run_bures(args):
    problem, resolved = _load(args)
    rho, d = _state_inputs(resolved)
    deps = np.array(_parse_list(args.deps, float, "deps"))
    if deps.shape != (len(d),):
        raise UsageError(f"--deps needs {len(d)} values, got {deps.size}")
    ds2 = bures_infinitesimal(rho, d.combine(deps))
    res = compute(rho, d, _choice(args))
    doc = {
        "version": qio.FORMAT_VERSION,
        "parameter_names": problem.parameter_names,
        "deps": deps.tolist(),
        "bures_squared": ds2,
        "quarter_qfim_form": float(deps @ res.h @ deps / 4.0),
        "method": res.method,
    }
    _emit(qio.dumps(doc), args.output)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    runners = {
        "compute": _run_compute,
        "sld": lambda a: _run_compute(a, force_sld=True),
        "compare": _run_compare,
        "bench": _run_bench,
        "bures": _run_bures,
    }
    try:
        return runners[args.command](args)
    except qio.FormatError as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QfimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
