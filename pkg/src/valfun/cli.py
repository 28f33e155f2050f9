"""Command-line front end: problem registry, analysis commands, JSON reports.

Reports go to stdout as canonical JSON (sorted keys, two-space indent) and
are byte-identical for identical inputs and seed.  Exit codes: 0 success,
2 analysis failure (for example a weak-duality violation), 1 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import cq as cq_mod
from . import model, stationarity, subdiff, valuefn, wolfe

SCHEMA_VERSION = 1


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _parse_vector(text, dim=None, label="vector"):
    try:
        v = np.array([float(tok) for tok in text.split(",")], dtype=float)
    except ValueError:
        raise SystemExit2(f"cannot parse {label} {text!r}")
    if dim is not None and v.shape[0] != dim:
        raise SystemExit2(f"{label} has {v.shape[0]} components, expected {dim}")
    return v


class SystemExit2(Exception):
    """Usage error; rendered to stderr with exit code 1."""


def _load_problem(args):
    params = {}
    for spec in args.param or []:
        if "=" not in spec:
            raise SystemExit2(f"--param expects name=value, got {spec!r}")
        k, v = spec.split("=", 1)
        try:
            params[k.strip()] = float(v)
        except ValueError:
            raise SystemExit2(f"--param value {v!r} is not a number")
    if args.problem_file:
        with open(args.problem_file, "r", encoding="utf-8") as fh:
            return model.load_problem(fh.read(), name=args.problem_file, params=params)
    if not args.problem:
        raise SystemExit2("one of --problem or --problem-file is required")
    return model.builtin(args.problem, params=params)


def _solver_config(args, problem=None):
    base = dict(
        n_starts=8, grid_density=9, max_iter=300, seed=0,
        cluster_tol=1e-4, max_clusters=16, activity_tol=1e-6,
    )
    if problem is not None:
        base.update(getattr(problem, "solver_defaults", {}))
    for key in ("n_starts", "grid_density", "max_iter", "seed",
                "cluster_tol", "max_clusters", "activity_tol"):
        given = getattr(args, key, None)
        if given is not None:
            base[key] = given
    env = os.environ.get("VALFUN_SEED")
    if env is not None:
        try:
            base["seed"] = int(env)
        except ValueError:
            raise SystemExit2(f"VALFUN_SEED={env!r} is not an integer")
    return valuefn.SolverConfig(**base)


def _base_report(p, args, command, config):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "problem": p.name,
        "parameters": _to_jsonable(p.params),
        "config": {
            "n_starts": config.n_starts,
            "grid_density": config.grid_density,
            "max_iter": config.max_iter,
            "seed": config.seed,
            "cluster_tol": config.cluster_tol,
            "value_tol": config.value_tol,
            "max_clusters": config.max_clusters,
            "activity_tol": config.activity_tol,
            "stat_tol": config.stat_tol,
        },
        "results": {},
        "warnings": [],
        "failures": [],
    }


def _solve_payload(rep):
    return {
        "x": _to_jsonable(rep.x),
        "value": _to_jsonable(rep.value),
        "solutions": _to_jsonable(rep.solutions),
        "kkt_residuals": _to_jsonable(rep.kkt_residuals),
        "multipliers": _to_jsonable(rep.multipliers),
        "diagnostics": _to_jsonable(rep.diagnostics),
    }


def _estimate_payload(est):
    return {
        "kind": est.kind,
        "pieces": [
            {
                "y": _to_jsonable(pc.y),
                "lam": _to_jsonable(pc.lam),
                "r": pc.r,
                "vertices": _to_jsonable(pc.gens.vertices),
                "rays": _to_jsonable(pc.gens.rays),
            }
            for pc in est.pieces
        ],
        "flags_used": _to_jsonable(est.flags_used),
        "provenance": _to_jsonable(est.provenance),
    }


def _verdict_payload(v):
    return {
        "status": v.status,
        "multipliers": _to_jsonable(v.multipliers),
        "residuals": _to_jsonable(v.residuals),
        "reason": v.reason,
    }


def _cmd_problems(args):
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "problems",
        "results": {"builtins": model.builtin_names()},
        "warnings": [],
        "failures": [],
    }
    return report, None


def _cmd_value(args):
    p = _load_problem(args)
    config = _solver_config(args, p)
    x = _parse_vector(args.x, p.n, "--x")
    rep = valuefn.solve_inner(p, x, config)
    report = _base_report(p, args, "value", config)
    report["results"] = {"x": _to_jsonable(x), "value": _to_jsonable(rep.value)}
    return report, f"V({args.x}) = {rep.value:.10g}"


def _cmd_solutions(args):
    p = _load_problem(args)
    config = _solver_config(args, p)
    x = _parse_vector(args.x, p.n, "--x")
    rep = valuefn.solve_inner(p, x, config)
    report = _base_report(p, args, "solutions", config)
    report["results"] = _solve_payload(rep)
    return report, f"{len(rep.solutions)} solution cluster(s), value {rep.value:.10g}"


def _cmd_subdiff(args):
    p = _load_problem(args)
    config = _solver_config(args, p)
    x = _parse_vector(args.x, p.n, "--x")
    point = _parse_vector(args.y, p.m, "--y") if args.y else None
    est = subdiff.upper_estimate(
        p, x, args.kind, point=point, config=config,
        activity_tol=config.activity_tol)
    report = _base_report(p, args, "subdiff", config)
    report["results"] = _estimate_payload(est)
    report["warnings"].extend(est.warnings)
    return report, f"{args.kind} estimate: {len(est.pieces)} piece(s)"


def _cmd_cq(args):
    p = _load_problem(args)
    config = _solver_config(args, p)
    x = _parse_vector(args.x, p.n, "--x")
    y = _parse_vector(args.y, p.m, "--y")
    lam = _parse_vector(args.lam, p.q, "--lam") if args.lam else None
    report = _base_report(p, args, "cq", config)
    if args.system in ("inner", "dual_system", "mpec_branch"):
        rep = cq_mod.check_licq(
            p, model.Point(x, y, lam), args.system, activity_tol=config.activity_tol)
    elif args.system == "mfcq":
        rep = cq_mod.check_mfcq(p, x, y, activity_tol=config.activity_tol)
    elif args.system == "crcq":
        rep = cq_mod.check_crcq_sampled(
            p, x, y, radius=args.radius, n_samples=args.samples,
            seed=config.seed, activity_tol=config.activity_tol)
    else:
        raise SystemExit2(f"unknown CQ system {args.system!r}")
    report["results"] = {
        "kind": rep.kind,
        "verdict": rep.verdict,
        "evidence": _to_jsonable(rep.evidence),
        "tolerances": _to_jsonable(rep.tolerances),
    }
    return report, f"{rep.kind}: {rep.verdict}"


def _cmd_wolfe(args):
    p = _load_problem(args)
    config = _solver_config(args, p)
    report = _base_report(p, args, "wolfe", config)
    if args.check_weak_duality:
        if not args.x:
            raise SystemExit2("--check-weak-duality requires at least one --x")
        xs = [_parse_vector(t, p.n, "--x") for t in args.x]
        rep = wolfe.check_weak_duality(p, xs, config)
        report["results"] = {
            "xs": _to_jsonable(rep.xs),
            "primal_values": _to_jsonable(rep.primal_values),
            "dual_values": _to_jsonable(rep.dual_values),
            "margins": _to_jsonable(rep.margins),
            "tol": rep.tol,
            "passed": rep.passed,
        }
        report["warnings"].extend(rep.notes)
        if not rep.passed:
            report["failures"].append("weak duality violated beyond tolerance")
        return report, f"weak duality {'passed' if rep.passed else 'VIOLATED'}"
    if not args.x:
        raise SystemExit2("wolfe requires --x")
    x = _parse_vector(args.x[0], p.n, "--x")
    res = wolfe.dual_value(p, x, config)
    report["results"] = {
        "x": _to_jsonable(x),
        "dual_value_best_found": _to_jsonable(res.value),
        "minimizer_y": _to_jsonable(res.y),
        "minimizer_lam": _to_jsonable(res.lam),
        "kkt_residual": _to_jsonable(res.kkt_residual),
        "n_converged_starts": res.n_converged,
        "possibly_unbounded": res.possibly_unbounded,
        "label": res.label,
    }
    if res.possibly_unbounded:
        report["warnings"].append("dual descent passed the unboundedness guard")
    return report, f"V_D({args.x[0]}) <= {res.value:.10g} (best-found)"


def _cmd_certify(args):
    p = _load_problem(args)
    config = _solver_config(args, p)
    x = _parse_vector(args.x[0] if isinstance(args.x, list) else args.x, p.n, "--x")
    y = _parse_vector(args.y, p.m, "--y")
    cert = stationarity.certify_point(
        p, x, y, config, activity_tol=config.activity_tol)
    report = _base_report(p, args, "certify", config)
    report["results"] = {
        "x": _to_jsonable(x),
        "y": _to_jsonable(y),
        "systems": {k: _verdict_payload(v) for k, v in sorted(cert.systems.items())},
        "index_partition": _to_jsonable(cert.partition),
        "tolerances": _to_jsonable(cert.tolerances),
    }
    report["warnings"].extend(cert.warnings)
    held = sorted(k for k, v in cert.systems.items() if v.status == "holds")
    return report, "holds: " + (", ".join(held) if held else "none")


def _cmd_oracle(args):
    p = _load_problem(args)
    config = _solver_config(args, p)
    x = _parse_vector(args.x, p.n, "--x")
    samples = valuefn.numeric_subdiff_oracle(
        p, x, radius=args.radius, n_samples=args.samples, h=args.h, config=config)
    report = _base_report(p, args, "oracle", config)
    report["results"] = {
        "x": _to_jsonable(x),
        "radius": args.radius,
        "h": args.h,
        "samples": [
            {
                "x": _to_jsonable(s.x),
                "grad": _to_jsonable(s.grad),
                "score": _to_jsonable(s.score),
                "smooth": s.smooth,
            }
            for s in samples
        ],
        "n_smooth": sum(1 for s in samples if s.smooth),
    }
    return report, f"{len(samples)} samples, {sum(1 for s in samples if s.smooth)} smooth"


def build_parser():
    parser = argparse.ArgumentParser(
        prog="valfun",
        description="Sensitivity analysis of maximal value functions and "
                    "stationarity certification for minimax problems.",
    )
    sub = parser.add_subparsers(dest="subcommand")

    def add_common(sp, needs_x=True):
        sp.add_argument("--problem", help="builtin problem name")
        sp.add_argument("--problem-file", help="path to a problem document")
        sp.add_argument("--param", action="append",
                        help="override a parameter, name=value (repeatable)")
        # None means: use the problem file's [solver] value, then the default
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--n-starts", type=int, default=None)
        sp.add_argument("--grid-density", type=int, default=None)
        sp.add_argument("--max-iter", type=int, default=None)
        sp.add_argument("--cluster-tol", type=float, default=None)
        sp.add_argument("--max-clusters", type=int, default=None)
        sp.add_argument("--activity-tol", type=float, default=None)
        sp.add_argument("--verbose", action="store_true")

    sp = sub.add_parser("problems", help="list builtin problems")
    sp.add_argument("--verbose", action="store_true")

    sp = sub.add_parser("value", help="evaluate V(x)")
    add_common(sp)
    sp.add_argument("--x", required=True, help="comma-separated x vector")

    sp = sub.add_parser("solutions", help="solve the inner maximization")
    add_common(sp)
    sp.add_argument("--x", required=True)

    sp = sub.add_parser("subdiff", help="subdifferential upper estimate")
    add_common(sp)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", help="designated solution for single-point kinds")
    sp.add_argument("--kind", required=True, choices=list(subdiff.KINDS))

    sp = sub.add_parser("cq", help="constraint-qualification verdicts")
    add_common(sp)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--lam", help="multiplier vector for joint systems")
    sp.add_argument("--system", required=True,
                    choices=["inner", "dual_system", "mpec_branch", "mfcq", "crcq"])
    sp.add_argument("--radius", type=float, default=0.1)
    sp.add_argument("--samples", type=int, default=64)

    sp = sub.add_parser("wolfe", help="Wolfe dual value / weak duality")
    add_common(sp)
    sp.add_argument("--x", action="append", help="x vector (repeatable)")
    sp.add_argument("--check-weak-duality", action="store_true")

    sp = sub.add_parser("certify", help="stationarity certificate at (x, y)")
    add_common(sp)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)

    sp = sub.add_parser("oracle", help="sampled finite-difference gradients of V")
    add_common(sp)
    sp.add_argument("--x", required=True)
    sp.add_argument("--radius", type=float, required=True)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--h", type=float, default=1e-5)

    return parser


_COMMANDS = {
    "problems": _cmd_problems,
    "value": _cmd_value,
    "solutions": _cmd_solutions,
    "subdiff": _cmd_subdiff,
    "cq": _cmd_cq,
    "wolfe": _cmd_wolfe,
    "certify": _cmd_certify,
    "oracle": _cmd_oracle,
}


_VECTOR_FLAGS = {"--x", "--y", "--lam"}


def _merge_vector_flags(argv):
    """Join ``--x -1,1`` into ``--x=-1,1`` so argparse does not mistake a
    leading minus sign for an option."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VECTOR_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv, stdout=None, stderr=None):
    """Entry point returning the exit code; reports go to ``stdout``."""
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_vector_flags(list(argv)))
    except SystemExit as exc:  # argparse failure
        return 1 if exc.code not in (0, None) else 0
    if not args.subcommand:
        parser.print_usage(stderr)
        return 1
    try:
        report, summary = _COMMANDS[args.subcommand](args)
    except SystemExit2 as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    except (model.FormatError, model.InfeasiblePoint, valuefn.NoFeasiblePoint,
            wolfe.NoConvergedStart, stationarity.NotInSolutionSet,
            stationarity.NotKktPoint, stationarity.NotMpecFeasible,
            cq_mod.UnsupportedActiveSet, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1

    text = json.dumps(_to_jsonable(report), indent=2, sort_keys=True, allow_nan=False)
    print(text, file=stdout)
    if getattr(args, "verbose", False) and summary:
        print(summary, file=stderr)
    return 2 if report.get("failures") else 0


def main():
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
