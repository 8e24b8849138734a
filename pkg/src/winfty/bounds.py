"""Lower bounds on transport cost in terms of W_inf or of plan displacement."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostFunction
from .solvers import solve_cost, solve_winf
from .space import (
    TOL,
    BallMassProfile,
    DiscreteMeasure,
    MetricSpace,
    TransportPlan,
    ball_mass,
    delta_components,
    plan_cost,
    plan_sup_distance,
)


class ChainConditionError(ValueError):
    pass


def _profile(m) -> BallMassProfile:
    return m if isinstance(m, BallMassProfile) else ball_mass(m)


def omega_main(m: BallMassProfile, h: CostFunction, t: float) -> float:
    """½·m(t/17)·h(t/17); zero at t = 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    return 0.5 * float(m(t / 17)) * float(h(t / 17))


@dataclass
class BoundReport:
    cost: float
    winf: float
    r: float
    bound: float
    passed: bool
    vacuous: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "cost": self.cost,
            "winf_or_sup": self.winf,
            "r": self.r,
            "bound": self.bound,
            "passed": self.passed,
            "vacuous": self.vacuous,
            **self.extra,
        }


def _require_inside(mu: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    outside = set(nu.support.tolist()) - set(mu.support.tolist())
    if outside:
        raise ValueError(f"nu charges points outside supp mu: {sorted(outside)}")


def verify_main_bound(
    mu: DiscreteMeasure, nu: DiscreteMeasure, h: CostFunction, delta: float, tol: float = TOL
) -> BoundReport:
    """Check cost(mu, nu) >= ½·m(r)·h(r) with r = (W_inf - delta)/17 on a delta-connected support."""
    _require_inside(mu, nu)
    if len(delta_components(mu.support, mu.space, delta, tol)) > 1:
        raise ValueError(f"supp mu is not {delta:g}-connected")
    m = ball_mass(mu)
    cost = solve_cost(mu, nu, h, tol).value
    w = solve_winf(mu, nu, tol).value
    r = (w - delta) / 17
    if r <= 0:
        return BoundReport(cost, w, r, 0.0, True, True)
    bound = 0.5 * float(m(r)) * float(h(r))
    return BoundReport(cost, w, r, bound, cost >= bound - tol, False, {"m_r": float(m(r))})


def sharpness_witness(
    mu: DiscreteMeasure, r: float, x: int | None = None
) -> tuple[DiscreteMeasure, TransportPlan]:
    """Collapse the open ball B(x, r) onto x; x defaults to the smallest-ball centre."""
    space = mu.space
    supp = mu.support
    if supp.size == 1:
        if r <= 0:
            raise ValueError("r must be positive")
        return mu, TransportPlan.identity(mu)
    diam = space.diameter(supp)
    if not 0 < r < diam:
        raise ValueError(f"r = {r!r} outside (0, diam supp mu = {diam!r})")
    if x is None:
        x = ball_mass(mu).minimizing_center(r)
    if x not in set(supp.tolist()):
        raise ValueError("collapse centre must lie in supp mu")
    ball = [int(z) for z in supp if space.dist[x, z] < r]
    if len(ball) == supp.size:
        raise ValueError("ball covers the whole support; pick another centre or smaller r")
    w = mu.weights.copy()
    w[ball] = 0.0
    w[x] = mu.mass(ball)
    nu = DiscreteMeasure(space, w, mu.total, mu.tol)
    entries = [(int(z), int(z), float(mu.weights[z])) for z in supp if z not in ball]
    entries += [(z, int(x), float(mu.weights[z])) for z in ball]
    return nu, TransportPlan.from_entries(mu, nu, entries)


# -- chains ------------------------------------------------------------------------------


def _all_pairs(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Floyd-Warshall; returns (distance, next-hop) matrices."""
    n = weights.shape[0]
    sp = weights.copy()
    np.fill_diagonal(sp, 0.0)
    nxt = np.tile(np.arange(n), (n, 1))
    for k in range(n):
        alt = sp[:, k, None] + sp[None, k, :]
        better = alt < sp
        if better.any():
            sp = np.where(better, alt, sp)
            nxt = np.where(better, nxt[:, k, None], nxt)
    return sp, nxt


def _path(nxt: np.ndarray, a: int, b: int) -> list[int]:
    out = [a]
    while a != b:
        a = int(nxt[a, b])
        out.append(a)
    return out


def _best_chains(weights: np.ndarray):
    """Cheapest chain with at least one intermediate point for every ordered pair.

    Returns (cost, via, nxt): cost[x, y] = min over v not in {x, y} of
    sp[x, v] + weights[v, y]; ``via`` is the minimizing v.
    """
    sp, nxt = _all_pairs(weights)
    n = weights.shape[0]
    first = sp.copy()
    np.fill_diagonal(first, np.inf)
    last = weights.copy()
    np.fill_diagonal(last, np.inf)
    total = first[:, :, None] + last[None, :, :]  # (x, v, y)
    idx = np.arange(n)
    total[idx, :, idx] = np.inf  # v == y handled by last's diagonal; x == y pairs unused
    via = np.argmin(total, axis=1)
    cost = np.take_along_axis(total, via[:, None, :], axis=1)[:, 0, :]
    return cost, via, nxt


@dataclass
class ChainWitness:
    x: int
    y: int
    sequence: list[int]
    cost: float
    slack: float


@dataclass
class ChainReport:
    rows: list[dict]
    witnesses: dict[tuple[int, int], ChainWitness]
    resolution: float
    holds: bool

    def failures(self) -> list[dict]:
        return [r for r in self.rows if not r["exempt"] and not r["holds"]]


def chain_condition(
    mu: DiscreteMeasure, h: CostFunction, resolution: float = 0.0, tol: float = TOL
) -> ChainReport:
    """Per pair of support points: is some chain with >= 1 intermediate point strictly cheaper?

    Pairs at distance <= ``resolution`` are reported as exempt; with the
    default 0 every pair counts, so the closest pair of any finite support
    always fails.
    """
    supp = mu.support
    d = mu.space.dist[np.ix_(supp, supp)]
    hd = h(d)
    cost, via, nxt = _best_chains(hd)
    rows: list[dict] = []
    witnesses: dict[tuple[int, int], ChainWitness] = {}
    holds = True
    for a in range(supp.size):
        for b in range(a + 1, supp.size):
            x, y = int(supp[a]), int(supp[b])
            exempt = bool(d[a, b] <= resolution)
            ok = bool(cost[a, b] < hd[a, b] - tol)
            rows.append(
                {
                    "x": x,
                    "y": y,
                    "d": float(d[a, b]),
                    "h_d": float(hd[a, b]),
                    "chain_cost": float(cost[a, b]),
                    "slack": float(hd[a, b] - cost[a, b]),
                    "holds": ok,
                    "exempt": exempt,
                }
            )
            if ok:
                seq = [int(supp[k]) for k in _path(nxt, a, int(via[a, b]))] + [y]
                witnesses[(x, y)] = ChainWitness(x, y, seq, float(cost[a, b]), float(hd[a, b] - cost[a, b]))
            elif not exempt:
                holds = False
    return ChainReport(rows, witnesses, resolution, holds)


@dataclass
class RhoProfile:
    """Nondecreasing step function; ``breakpoints`` descend, ``values[k]`` holds on [R_{k+1}, R_k)."""

    breakpoints: list[float]
    deltas: list[float]
    values: list[float]

    def __call__(self, t: float) -> float:
        for R, v in zip(self.breakpoints, self.values):
            if t >= R:
                return v
        return 0.0

    def to_json(self) -> dict:
        return {"breakpoints": self.breakpoints, "deltas": self.deltas, "values": self.values}


def _inflated_slack(d: np.ndarray, hd: np.ndarray, h: CostFunction, delta: float) -> np.ndarray:
    cost, _, _ = _best_chains(h(d + delta))
    return hd - cost


def rho_estimate(
    mu: DiscreteMeasure,
    h: CostFunction,
    thresholds=None,
    resolution: float = 0.0,
    iterations: int = 40,
    tol: float = TOL,
) -> RhoProfile:
    """Uniform hop inflation that every far-enough pair's chain survives.

    For each threshold R_k the largest delta (by bisection on [0, diam]) such
    that every support pair at distance >= R_k keeps a chain with
    sum h(hop + delta) < h(dist).  Default thresholds are diam * 2**-k,
    k = 0..10, above ``resolution``, closed off by the smallest pair distance
    above ``resolution``.
    """
    supp = mu.support
    d = mu.space.dist[np.ix_(supp, supp)]
    hd = h(d)
    diam = float(d.max())
    if thresholds is None:
        R = [diam * 2.0**-k for k in range(11)]
        R = [x for x in R if x > resolution]
        above = d[d > resolution]
        if above.size and (not R or above.min() < min(R)):
            R.append(float(above.min()))
    else:
        R = [float(x) for x in thresholds]
    R = sorted(set(R), reverse=True)
    if not R:
        raise ValueError("no thresholds above the resolution")
    off = ~np.eye(supp.size, dtype=bool)
    slack0 = _inflated_slack(d, hd, h, 0.0)
    considered = off & (d >= R[-1])
    if np.any(slack0[considered] <= tol):
        raise ChainConditionError("condition (1) violated")

    deltas = []
    for Rk in R:
        pairs = off & (d >= Rk)
        if not pairs.any():
            deltas.append(diam)
            continue

        def ok(delta):
            return bool(np.all(_inflated_slack(d, hd, h, delta)[pairs] > tol))

        lo, hi = 0.0, diam
        if ok(hi):
            deltas.append(hi)
            continue
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        deltas.append(lo)
    values = [deltas[0]]
    for dk in deltas[1:]:
        values.append(min(dk, values[-1]))
    return RhoProfile(R, deltas, values)


def verify_rho(mu: DiscreteMeasure, h: CostFunction, rho: RhoProfile, tol: float = TOL) -> list[tuple[int, int]]:
    """Pairs (x, y) with dist >= smallest threshold whose chain fails at inflation rho(dist)."""
    supp = mu.support
    d = mu.space.dist[np.ix_(supp, supp)]
    hd = h(d)
    bad = []
    rho_of = np.vectorize(rho)(d)
    for level in sorted(set(rho_of[d >= rho.breakpoints[-1]].tolist())):
        slack = _inflated_slack(d, hd, h, level)
        mask = (rho_of == level) & (d >= rho.breakpoints[-1]) & ~np.eye(supp.size, dtype=bool)
        for a, b in zip(*np.nonzero(mask & (slack <= tol))):
            if a < b:
                bad.append((int(supp[a]), int(supp[b])))
    return bad


def omega_plan(mu, h: CostFunction, rho: RhoProfile, t: float) -> float:
    """m(rho(t)/4)·h(rho(t)/4); ``mu`` may be a measure or its ball-mass profile."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    q = rho(t) / 4
    if q <= 0:
        return 0.0
    return float(_profile(mu)(q)) * float(h(q))


def verify_plan_bound(
    mu: DiscreteMeasure, nu: DiscreteMeasure, h: CostFunction, rho: RhoProfile, tol: float = TOL
) -> BoundReport:
    """Check cost(lambda) >= m(rho(D)/4)·h(rho(D)/4) for an optimal plan lambda with sup displacement D."""
    _require_inside(mu, nu)
    if not h.continuous:
        raise ValueError("plan-level bound needs a continuous cost")
    res = solve_cost(mu, nu, h, tol)
    D = plan_sup_distance(res.plan, tol)
    bound = omega_plan(mu, h, rho, D)
    cost = plan_cost(res.plan, h)
    return BoundReport(cost, D, rho(D) / 4, bound, cost >= bound - tol, bound == 0.0, {"rho_D": rho(D)})


@dataclass
class RefinementResult:
    witness: ChainWitness | None
    depth: int
    level_costs: list[float]
    target_cost: float
    # h(t)/t**s at the finest hop length reached; small values favour success
    ratio_at_finest: float

    @property
    def success(self) -> bool:
        return self.witness is not None


def refine_chain_along_path(
    path,
    h: CostFunction,
    s: float,
    space: MetricSpace,
    x: int | None = None,
    y: int | None = None,
    max_depth: int = 60,
    tol: float = TOL,
) -> RefinementResult:
    """Subsample ``path`` with hop lengths <= d(x, y)·2**-k for k = 1, 2, ... until the chain is cheaper."""
    path = [int(p) for p in path]
    if len(path) < 3:
        raise ValueError("path needs at least one interior point")
    if (x is not None and x != path[0]) or (y is not None and y != path[-1]):
        raise ValueError("path endpoints do not match the target pair")
    x, y = path[0], path[-1]
    if x == y:
        raise ValueError("path endpoints must differ")
    dist = space.dist
    target = float(h(dist[x, y]))
    finest = min(dist[a, b] for a, b in zip(path[:-1], path[1:]))
    costs: list[float] = []
    chain: list[int] = []
    for depth in range(1, max_depth + 1):
        step = dist[x, y] * 2.0**-depth
        chain = [0]
        while chain[-1] != len(path) - 1:
            i = chain[-1]
            reach = [j for j in range(i + 1, len(path)) if dist[path[i], path[j]] <= step]
            chain.append(max(reach) if reach else i + 1)
        if len(chain) < 3:
            chain = [0, len(path) // 2, len(path) - 1]
        seq = [path[k] for k in chain]
        cost = float(sum(h(dist[a, b]) for a, b in zip(seq[:-1], seq[1:])))
        costs.append(cost)
        if cost < target - tol:
            return RefinementResult(
                ChainWitness(x, y, seq, cost, target - cost), depth, costs, target, float(h(finest) / finest**s)
            )
        if step < finest:
            break
    return RefinementResult(None, len(costs), costs, target, float(h(finest) / finest**s))
