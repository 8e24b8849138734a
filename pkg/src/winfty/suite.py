"""Seeded acceptance checks, each returning a JSON-ready record, and the bundle runner."""
from __future__ import annotations

import csv
import io as _io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .bounds import (
    ChainConditionError,
    chain_condition,
    refine_chain_along_path,
    rho_estimate,
    sharpness_witness,
    verify_main_bound,
    verify_plan_bound,
    verify_rho,
)
from .convergence import FAMILIES, winf_verdict
from .costs import CostFunction
from .instances import line_space, snowflake_space, grid_space
from .monotonicity import build_collapse_plan, check_cyclical_monotonicity
from .solvers import ORACLE_MAX_SUPPORT, oracle_cost_vertices, oracle_winf, solve_cost, solve_winf
from .space import (
    TOL,
    DiscreteMeasure,
    MetricSpace,
    TransportPlan,
    ball_mass,
    connectivity_scale,
    plan_cost,
    plan_sup_distance,
)
from .surgery import SurgeryParams, check_assumption, surgery_transport

ALL_CRITERIA = (1, 2, 3, 4, 5, 6, 7, 8, 9)


@dataclass(frozen=True)
class RunConfig:
    tol: float = TOL
    seed: int = 0
    oracle_max_support: int = ORACLE_MAX_SUPPORT
    out: str | None = None
    format: str = "json"
    criteria: tuple[int, ...] = ALL_CRITERIA
    workers: int = 1

    def __post_init__(self):
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        bad = [c for c in self.criteria if c not in ALL_CRITERIA]
        if bad:
            raise ValueError(f"unknown criteria {bad}")
        if self.workers < 1:
            raise ValueError("workers must be positive")


def _rng(cfg: RunConfig, k: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, k])


def _record(k: int, title: str, failures: list, **extra) -> dict:
    return {"criterion": k, "title": title, "passed": not failures, "failures": failures[:20], "n_failures": len(failures), **extra}


def _random_measure(space: MetricSpace, idx, rng) -> DiscreteMeasure:
    w = np.zeros(space.n)
    w[idx] = rng.dirichlet(np.ones(len(idx)))
    return DiscreteMeasure(space, w)


def _cloud(rng, n: int) -> MetricSpace:
    return MetricSpace.from_points(rng.random((n, 2)))


# -- 1: surgery ------------------------------------------------------------------------------


def _surgery_instance(rng, tol):
    n = int(rng.integers(6, 41))
    eps = 0.0 if rng.random() < 0.5 else 0.02
    k = int(rng.integers(3, n // 2 + 2))
    base = rng.random((k, 2))
    extra = base[rng.integers(0, k, n - k)] + rng.uniform(-1, 1, (n - k, 2)) * eps / 2
    space = MetricSpace.from_points(np.concatenate([base, extra]))
    supp_mu = list(range(k))
    mu = _random_measure(space, supp_mu, rng)
    # with eps > 0 the target may also charge points within eps of supp mu
    pool = list(range(n)) if eps > 0 else supp_mu
    m = int(rng.integers(1, len(pool) + 1))
    nu = _random_measure(space, sorted(rng.choice(pool, m, replace=False).tolist()), rng)
    delta = connectivity_scale(supp_mu, space)
    lam = solve_cost(mu, nu, CostFunction.power(float(rng.choice([1.0, 2.0]))), tol).plan
    prof = ball_mass(mu)
    radii = np.append(prof.breakpoints[prof.breakpoints > 0], 1.01 * space.diameter())
    start = int(rng.integers(0, radii.size))
    indep = np.outer(mu.weights, nu.weights)
    lam_dense = lam.to_dense()
    for r in radii[start:]:
        for theta in (0.5, 0.25, 0.125, 0.0):
            mix = TransportPlan.from_dense(mu, nu, (1 - theta) * lam_dense + theta * indep, tol=1e-9)
            if check_assumption(mix, prof, float(r))[0]:
                return mix, float(r), eps, delta
    raise RuntimeError("no radius satisfies the long-haul assumption")


def criterion_1(cfg: RunConfig) -> dict:
    rng = _rng(cfg, 1)
    failures = []
    eps_used = {"0": 0, "small": 0}
    for trial in range(200):
        lam, r, eps, delta = _surgery_instance(rng, cfg.tol)
        eps_used["0" if eps == 0 else "small"] += 1
        out = surgery_transport(lam, SurgeryParams(r, eps, delta), tol=cfg.tol)
        limits = {"short": 17 * r + 4 * eps, "chain": 16 * r + 4 * eps + delta, "diagonal": 8 * r + 2 * eps}
        d = lam.space.dist
        problems = []
        if out.eta.marginal_error() > 1e-9:
            problems.append("marginals")
        if plan_sup_distance(out.eta, 0.0) > SurgeryParams(r, eps, delta).bound:
            problems.append("sup displacement")
        for name, entries in out.parts.items():
            if any(d[x, y] > limits[name] for x, y, _ in entries):
                problems.append(f"{name} part displacement")
        if problems:
            failures.append({"trial": trial, "problems": problems})
    return _record(1, "surgery displacement bounds", failures, instances=200, eps_split=eps_used)


# -- 2: main bound ---------------------------------------------------------------------------


def criterion_2(cfg: RunConfig) -> dict:
    rng = _rng(cfg, 2)
    failures = []
    nonvacuous = 0
    min_ratio = math.inf
    for trial in range(200):
        n = int(rng.integers(5, 31))
        space = _cloud(rng, n)
        mu = _random_measure(space, list(range(n)), rng)
        k = int(rng.integers(1, n + 1))
        nu = _random_measure(space, sorted(rng.choice(n, k, replace=False).tolist()), rng)
        delta = connectivity_scale(range(n), space)
        h = CostFunction.power(float(trial % 3 + 1))
        rep = verify_main_bound(mu, nu, h, delta, cfg.tol)
        if not rep.vacuous:
            nonvacuous += 1
            if rep.bound > 0:
                min_ratio = min(min_ratio, rep.cost / rep.bound)
        if not rep.passed:
            failures.append({"trial": trial, **rep.to_json()})
    return _record(2, "cost >= 1/2 m(r) h(r) with r = (W_inf - delta)/17", failures,
                   instances=200, nonvacuous=nonvacuous, min_cost_over_bound=min_ratio)


# -- 3: sharpness ----------------------------------------------------------------------------


def criterion_3(cfg: RunConfig) -> dict:
    rng = _rng(cfg, 3)
    failures = []
    h = CostFunction.power(2)
    for trial in range(50):
        if trial % 2 == 0:
            space = line_space(int(rng.integers(3, 31)))
        else:
            space = grid_space(int(rng.integers(2, 7)), int(rng.integers(2, 7)))
        mu = _random_measure(space, list(range(space.n)), rng)
        delta = connectivity_scale(range(space.n), space)
        r = float(rng.uniform(0.05, 0.95)) * space.diameter()
        nu, collapse = sharpness_witness(mu, r)
        cost = solve_cost(mu, nu, h, cfg.tol).value
        w = solve_winf(mu, nu, cfg.tol).value
        m = ball_mass(mu)
        cap = float(m(r) * h(r))
        r_low = (w - delta) / 17
        floor = 0.5 * float(m(r_low) * h(r_low)) if r_low > 0 else 0.0
        if not (floor - 1e-9 <= cost <= cap + 1e-9 and r - delta <= w <= r + 1e-9 and plan_cost(collapse, h) <= cap + 1e-9):
            failures.append({"trial": trial, "r": r, "delta": delta, "cost": cost, "floor": floor, "cap": cap, "winf": w})
    return _record(3, "sharpness witness sandwich", failures, instances=50)


# -- 4: solvers vs oracles -------------------------------------------------------------------


def criterion_4(cfg: RunConfig) -> dict:
    rng = _rng(cfg, 4)
    winf_fail, cost_fail = [], []
    max_gap = 0.0
    for trial in range(500):
        n = int(rng.integers(2, 9))
        space = _cloud(rng, n) if trial % 2 else MetricSpace.from_points(rng.integers(0, 5, (n, 2)).astype(float))
        k1 = int(rng.integers(1, min(cfg.oracle_max_support, n) + 1))
        k2 = int(rng.integers(1, min(cfg.oracle_max_support, n) + 1))
        mu = _random_measure(space, sorted(rng.choice(n, k1, replace=False).tolist()), rng)
        nu = _random_measure(space, sorted(rng.choice(n, k2, replace=False).tolist()), rng)
        a, b = solve_winf(mu, nu, cfg.tol).value, oracle_winf(mu, nu, cfg.tol)
        if a != b:
            winf_fail.append({"trial": trial, "solver": a, "oracle": b})
    for trial in range(200):
        n = int(rng.integers(2, 7))
        space = _cloud(rng, n)
        k1, k2 = int(rng.integers(1, min(3, n) + 1)), int(rng.integers(1, min(3, n) + 1))
        mu = _random_measure(space, sorted(rng.choice(n, k1, replace=False).tolist()), rng)
        nu = _random_measure(space, sorted(rng.choice(n, k2, replace=False).tolist()), rng)
        h = CostFunction.power(float(rng.choice([1.0, 2.0, 3.0])))
        a, b = solve_cost(mu, nu, h, cfg.tol).value, oracle_cost_vertices(mu, nu, h, cfg.tol)
        max_gap = max(max_gap, abs(a - b))
        if abs(a - b) > 1e-9:
            cost_fail.append({"trial": trial, "solver": a, "oracle": b})
    return _record(4, "solvers agree with brute-force oracles", winf_fail + cost_fail,
                   winf_instances=500, cost_instances=200, max_cost_gap=max_gap)


# -- 5: cyclical monotonicity ----------------------------------------------------------------


def criterion_5(cfg: RunConfig) -> dict:
    rng = _rng(cfg, 5)
    failures = []
    largest = 0
    for trial in range(200):
        n = int(rng.integers(2, 9))
        space = _cloud(rng, n)
        k1, k2 = int(rng.integers(1, min(5, n) + 1)), int(rng.integers(1, min(5, n) + 1))
        mu = _random_measure(space, sorted(rng.choice(n, k1, replace=False).tolist()), rng)
        nu = _random_measure(space, sorted(rng.choice(n, k2, replace=False).tolist()), rng)
        h = CostFunction.power(float(rng.choice([1.0, 2.0, 3.0])))
        plan = solve_cost(mu, nu, h, cfg.tol).plan
        largest = max(largest, plan.rows.size)
        v = check_cyclical_monotonicity(plan, h, K=4, tol=cfg.tol)
        if v is not None:
            failures.append({"trial": trial, **v.to_json()})
    line = line_space(4)
    mu = DiscreteMeasure.from_atoms(line, {0: 0.5, 3: 0.5})
    crossing = TransportPlan.from_entries(mu, mu, [(0, 3, 0.5), (3, 0, 0.5)])
    v = check_cyclical_monotonicity(crossing, CostFunction.power(2), K=4, tol=cfg.tol)
    # gain per unit mass: 3**2 + 3**2 - 0 - 0
    gain = None if v is None else v.gain
    if v is None or abs(v.gain - 18.0) > 1e-12:
        failures.append({"crossing_plan_gain": gain})
    return _record(5, "optimal plans are cyclically monotone", failures,
                   instances=200, max_plan_entries=largest, crossing_gain=gain)


# -- 6: chain condition ----------------------------------------------------------------------


def snowflake_grid(s: float = 1.5, n: int = 101) -> tuple[MetricSpace, DiscreteMeasure, float]:
    space = snowflake_space(n, s)
    mu = DiscreteMeasure.uniform(space)
    return space, mu, connectivity_scale(range(n), space)


def criterion_6(cfg: RunConfig) -> dict:
    space, mu, res = snowflake_grid()
    good = chain_condition(mu, CostFunction.power(2), resolution=res, tol=cfg.tol)
    bad = chain_condition(mu, CostFunction.power(1.2), resolution=res, tol=cfg.tol)
    literal = chain_condition(mu, CostFunction.power(2), tol=cfg.tol)
    geo = line_space(101, 1.0)
    path = list(range(101))
    quad = refine_chain_along_path(path, CostFunction.power(2), 1.0, geo, tol=cfg.tol)
    lin = refine_chain_along_path(path, CostFunction.power(1), 1.0, geo, tol=cfg.tol)
    failures = []
    if not good.holds:
        failures.append("p=2, s=1.5 should pass")
    if bad.holds:
        failures.append("p=1.2, s=1.5 should fail")
    if not quad.success:
        failures.append("quadratic refinement should succeed")
    if lin.success:
        failures.append("linear refinement should fail")
    return _record(
        6, "chain condition phase transition", failures,
        resolution=res,
        p2_failing_pairs=len(good.failures()),
        p12_failing_pairs=len(bad.failures()),
        literal_failing_pairs=len(literal.failures()),
        quadratic_refinement={"depth": quad.depth, "cost": quad.level_costs[-1], "target": quad.target_cost},
        linear_refinement={"depth": lin.depth, "cost": lin.level_costs[-1], "target": lin.target_cost},
    )


# -- 7: plan bound ---------------------------------------------------------------------------


def _plan_bound_trials(mu, h, rho, rng, count, tol):
    failures = []
    nonvacuous = 0
    supp = mu.support
    for trial in range(count):
        k = int(rng.integers(1, supp.size + 1))
        nu = _random_measure(mu.space, sorted(rng.choice(supp, k, replace=False).tolist()), rng)
        rep = verify_plan_bound(mu, nu, h, rho, tol)
        nonvacuous += not rep.vacuous
        if not rep.passed:
            failures.append({"trial": trial, **rep.to_json()})
    return failures, nonvacuous


def criterion_7(cfg: RunConfig) -> dict:
    rng = _rng(cfg, 7)
    h2 = CostFunction.power(2)
    failures = []
    line3 = line_space(3)
    mu3 = DiscreteMeasure.uniform(line3)
    rho3 = rho_estimate(mu3, h2, thresholds=[2.0], tol=cfg.tol)
    err3 = abs(rho3.deltas[0] - (math.sqrt(2) - 1))
    if err3 > 1e-6:
        failures.append({"line3_delta_error": err3})
    f3, nv3 = _plan_bound_trials(mu3, h2, rho3, rng, 200, cfg.tol)
    failures += f3

    space, mu, res = snowflake_grid()
    rho = rho_estimate(mu, h2, resolution=res, tol=cfg.tol)
    unverified = verify_rho(mu, h2, rho, cfg.tol)
    if unverified:
        failures.append({"rho_reverification_failures": unverified[:10]})
    fs, nvs = _plan_bound_trials(mu, h2, rho, rng, 200, cfg.tol)
    failures += fs

    # without the chain condition: partial collapse of one atom onto a far point
    h12 = CostFunction.power(1.2)
    try:
        rho_estimate(mu, h12, resolution=res, tol=cfg.tol)
        rho_error = None
        failures.append("rho_estimate accepted p = 1.2")
    except ChainConditionError as e:
        rho_error = str(e)
    x, y = 0, space.n - 1
    q = res / 4
    floor = float(ball_mass(mu)(q) * h12(q))
    collapse = []
    for t in [mu.weights[x] * 2.0**-k for k in range(1, 12)]:
        lam = build_collapse_plan(mu, [x], y, t)
        opt = solve_cost(mu, lam.target, h12, cfg.tol).value
        cost = plan_cost(lam, h12)
        collapse.append({"t": t, "cost": cost, "optimal_cost": opt, "sup": plan_sup_distance(lam)})
        if abs(cost - opt) > 1e-9:
            failures.append({"collapse_not_optimal": t})
    sup_const = len({c["sup"] for c in collapse}) == 1
    bound_fails = collapse[-1]["cost"] < floor
    if not (sup_const and bound_fails):
        failures.append({"collapse_demo": "no failing bound"})
    return _record(
        7, "plan-displacement bound and its necessity", failures,
        line3={"delta": rho3.deltas[0], "error": err3, "nonvacuous": nv3},
        snowflake={"rho": rho.to_json(), "nonvacuous": nvs},
        without_chain_condition={"rho_error": rho_error, "floor": floor, "collapse": collapse},
    )


# -- 8: convergence --------------------------------------------------------------------------


def criterion_8(cfg: RunConfig) -> dict:
    reports = []
    failures = []
    for name in sorted(FAMILIES):
        rep = winf_verdict(FAMILIES[name](), p=1.0, tol=cfg.tol)
        j = rep.to_json()
        reports.append(j)
        if not rep.match:
            failures.append({"family": name, "mismatch": True})
        if rep.wp.converging and rep.hausdorff.converging != rep.ball_mass.positive:
            failures.append({"family": name, "hausdorff_vs_ball_mass": True})
    return _record(8, "W_inf trend matches the three-condition prediction", failures, families=reports)


# -- 9: determinism --------------------------------------------------------------------------


def criterion_9(cfg: RunConfig) -> dict:
    """Re-run the cheap criteria and compare serialized reports byte for byte."""
    subset = (4, 5, 6)
    first = [io.dumps(CRITERIA[k](cfg)) for k in subset]
    second = [io.dumps(CRITERIA[k](cfg)) for k in subset]
    failures = [k for k, a, b in zip(subset, first, second) if a != b]
    return _record(9, "repeated runs are byte-identical", failures, rerun=list(subset))


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def _run_one(args):
    k, cfg = args
    return CRITERIA[k](cfg)


def _csv_summary(records) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", "title", "passed", "n_failures"])
    for rec in records:
        w.writerow([rec["criterion"], rec["title"], rec["passed"], rec["n_failures"]])
    return buf.getvalue()


def run_suite(config: RunConfig) -> tuple[int, dict[str, str]]:
    """Run the selected criteria; returns (exit code, bundle of file name -> text).

    The bundle is also written under ``config.out`` when set.
    """
    ks = sorted(set(config.criteria))
    if config.workers > 1 and len(ks) > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            records = list(pool.map(_run_one, [(k, config) for k in ks]))
    else:
        records = [CRITERIA[k](config) for k in ks]
    bundle: dict[str, str] = {}
    for rec in records:
        bundle[f"criterion_{rec['criterion']}.json"] = io.dumps(rec)
    if records:
        summary = [{k: rec[k] for k in ("criterion", "title", "passed", "n_failures")} for rec in records]
        bundle["summary.json"] = io.dumps({"seed": config.seed, "tol": config.tol, "results": summary})
        if config.format == "csv":
            bundle["summary.csv"] = _csv_summary(records)
    if config.out is not None:
        for name, text in bundle.items():
            io.write_text(Path(config.out) / name, text)
    code = 0 if all(rec["passed"] for rec in records) else 1
    return code, bundle
