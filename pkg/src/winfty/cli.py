"""Command-line entry point.  Exit codes: 0 all verdicts pass, 1 a verdict fails, 2 usage or IO error."""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .bounds import (
    ChainConditionError,
    chain_condition,
    rho_estimate,
    verify_main_bound,
    verify_plan_bound,
)
from .convergence import MeasureSequence, SplitScenario, winf_verdict
from .costs import parse_cost
from .instances import KINDS, generate_instance
from .monotonicity import check_cyclical_monotonicity
from .solvers import solve_cost, solve_winf
from .space import TOL
from .suite import ALL_CRITERIA, RunConfig, run_suite
from .surgery import SurgeryError, SurgeryParams, surgery_transport

OK, FAIL, USAGE = 0, 1, 2


def _csv(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.out:
        io.write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _cost(spec: str):
    try:
        return parse_cost(spec)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise io.InputError(f"cost {spec!r}: {e}") from e


def _load_pair(args):
    space = io.load_space(args.metric)
    mu = io.load_measure(args.mu, space, args.tol)
    nu = io.load_measure(args.nu, space, args.tol) if getattr(args, "nu", None) else None
    return space, mu, nu


def cmd_solve(args) -> int:
    space, mu, nu = _load_pair(args)
    res = solve_winf(mu, nu, args.tol) if args.winf else solve_cost(mu, nu, _cost(args.cost), args.tol)
    if args.format == "csv":
        _emit(args, _csv(["i", "j", "mass"], res.plan.entries))
    else:
        _emit(args, io.dumps({"value": res.value, "plan": io.plan_to_json(res.plan), "diagnostics": res.diagnostics}))
    return OK


def cmd_surgery(args) -> int:
    space, mu, nu = _load_pair(args)
    lam = io.load_plan(args.plan, space, mu, nu, args.tol)
    try:
        out = surgery_transport(lam, SurgeryParams(args.r, args.eps, args.delta), args.radius_mode, args.tol)
    except SurgeryError as e:
        _emit(args, io.dumps({"error": str(e)}))
        return FAIL
    _emit(args, io.dumps(out.to_json()))
    return OK


def cmd_verify_bound(args) -> int:
    space, mu, nu = _load_pair(args)
    h = _cost(args.cost)
    if args.main:
        rep = verify_main_bound(mu, nu, h, args.delta, args.tol)
        payload = {"bound": "main", **rep.to_json()}
    else:
        try:
            rho = rho_estimate(mu, h, args.thresholds, args.resolution, tol=args.tol)
        except ChainConditionError as e:
            _emit(args, io.dumps({"bound": "plan", "error": str(e), "passed": False}))
            return FAIL
        rep = verify_plan_bound(mu, nu, h, rho, args.tol)
        payload = {"bound": "plan", "rho": rho.to_json(), **rep.to_json()}
    _emit(args, io.dumps(payload))
    return OK if rep.passed else FAIL


def cmd_chain_check(args) -> int:
    space, mu, _ = _load_pair(args)
    rep = chain_condition(mu, _cost(args.cost), args.resolution, args.tol)
    if args.format == "json":
        _emit(args, io.dumps({"holds": rep.holds, "resolution": rep.resolution, "pairs": rep.rows}))
    else:
        cols = ["x", "y", "d", "h_d", "chain_cost", "slack", "holds", "exempt"]
        _emit(args, _csv(cols, [[r[c] for c in cols] for r in rep.rows]))
    return OK if rep.holds else FAIL


def cmd_rho(args) -> int:
    space, mu, _ = _load_pair(args)
    try:
        rho = rho_estimate(mu, _cost(args.cost), args.thresholds, args.resolution, tol=args.tol)
    except ChainConditionError as e:
        _emit(args, io.dumps({"error": str(e)}))
        return FAIL
    _emit(args, io.dumps(rho.to_json()))
    return OK


def cmd_monotone_check(args) -> int:
    space = io.load_space(args.metric)
    plan = io.load_plan(args.plan, space, tol=args.tol)
    v = check_cyclical_monotonicity(plan, _cost(args.cost), args.K, seed=args.seed, tol=args.tol)
    _emit(args, io.dumps({"monotone": v is None, "violation": None if v is None else v.to_json()}))
    return OK if v is None else FAIL


def cmd_converge(args) -> int:
    space = io.load_space(args.metric)
    terms = [io.load_measure(p, space, args.tol) for p in args.seq]
    limit = io.load_measure(args.limit, space, args.tol)
    try:
        seq = MeasureSequence(space, terms, limit, "cli")
    except ValueError as e:
        raise io.InputError(f"sequence: {e}") from e
    splits = None
    if args.split:
        obj = io.load_json(args.split)
        try:
            splits = [SplitScenario(seq, [np.asarray(w, float) for w in obj["terms"]], np.asarray(obj["limit"], float), "supplied")]
        except (KeyError, TypeError, ValueError) as e:
            raise io.InputError(f"{args.split}: {e}") from e
    rep = winf_verdict(seq, args.p, splits, args.scale, args.radii, args.threshold, args.tol)
    verdicts = rep.to_json()
    if args.format == "csv":
        rows = [
            [i + 1, rep.wp.values[i], rep.hausdorff.values[i], rep.winf.values[i]]
            for i in range(len(terms))
        ]
        _emit(args, _csv(["i", "wp", "hausdorff", "winf"], rows))
        if args.out:
            io.write_text(Path(args.out).with_suffix(".verdicts.json"), io.dumps(verdicts))
        else:
            sys.stdout.write(io.dumps(verdicts))
    else:
        _emit(args, io.dumps(verdicts))
    return OK if rep.match else FAIL


def cmd_generate(args) -> int:
    params = {}
    for item in args.param or []:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ValueError(f"parameter {item!r} is not key=value")
        params[key] = float(val) if any(c in val for c in ".eE") else int(val)
    space, mu = generate_instance(args.kind, args.seed, args.weights, **params)
    out = Path(args.out or ".")
    io.write_text(out / "metric.json", io.dumps(io.space_to_json(space)))
    io.write_text(out / "mu.json", io.dumps(io.measure_to_json(mu)))
    return OK


def cmd_suite(args) -> int:
    crit = tuple(int(c) for c in args.criteria.split(",") if c.strip()) if args.criteria is not None else ALL_CRITERIA
    cfg = RunConfig(args.tol, args.seed, args.oracle_max_support, args.out, args.format or "json", crit, args.workers)
    code, bundle = run_suite(cfg)
    if "summary.json" in bundle:
        for rec in json.loads(bundle["summary.json"])["results"]:
            print(f"criterion {rec['criterion']}: {'PASS' if rec['passed'] else 'FAIL'}  {rec['title']}")
    return code


def _floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="numerical tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file, or directory for generate/suite")
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="winfty", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(fn=fn)
        return p

    def files(p, nu=True):
        p.add_argument("--metric", required=True)
        p.add_argument("--mu", required=True)
        if nu:
            p.add_argument("--nu", required=True)

    p = add("solve", cmd_solve, "optimal cost or W_inf between two measures")
    files(p)
    p.add_argument("--cost", default="p:1")
    p.add_argument("--winf", action="store_true")

    p = add("surgery", cmd_surgery, "re-route a plan into one with bounded displacement")
    files(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--radius-mode", choices=("open", "closed"), default="open")

    p = add("verify-bound", cmd_verify_bound, "check a cost lower bound on one instance")
    files(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--main", action="store_true", help="bound in terms of W_inf")
    mode.add_argument("--plan", action="store_true", help="bound in terms of the optimal plan's displacement")
    p.add_argument("--cost", required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--resolution", type=float, default=0.0)
    p.add_argument("--thresholds", type=_floats, default=None)

    p = add("chain-check", cmd_chain_check, "per-pair chain condition table")
    files(p, nu=False)
    p.add_argument("--cost", required=True)
    p.add_argument("--resolution", type=float, default=0.0, help="pairs at or below this distance are exempt")

    p = add("rho", cmd_rho, "hop-inflation profile")
    files(p, nu=False)
    p.add_argument("--cost", required=True)
    p.add_argument("--thresholds", type=_floats, default=None, help="comma-separated, any order")
    p.add_argument("--resolution", type=float, default=0.0)

    p = add("monotone-check", cmd_monotone_check, "search a plan for cost-lowering cyclic reshuffles")
    p.add_argument("--metric", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--K", type=int, default=4)

    p = add("converge", cmd_converge, "diagnose W_inf convergence of a measure sequence")
    p.add_argument("--metric", required=True)
    p.add_argument("--seq", nargs="+", required=True)
    p.add_argument("--limit", required=True)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--split")
    p.add_argument("--scale", type=float)
    p.add_argument("--radii", type=_floats)
    p.add_argument("--threshold", type=float, default=1e-3)

    p = add("generate", cmd_generate, "write metric.json and mu.json for an instance family")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--weights", choices=("uniform", "random"), default="uniform")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="e.g. n=101, s=1.5, level=3")

    p = add("suite", cmd_suite, "run the acceptance suite")
    p.add_argument("--criteria", help=f"comma-separated subset of {','.join(map(str, ALL_CRITERIA))}")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--oracle-max-support", type=int, default=6)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("tol", TOL), ("seed", 0), ("out", None), ("format", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.fn(args)
    except io.InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
