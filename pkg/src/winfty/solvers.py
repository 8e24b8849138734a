"""Exact Kantorovich, W_p and W_inf solvers, with small brute-force oracles."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _flow
from .costs import CostFunction
from .space import TOL, DiscreteMeasure, TransportPlan, plan_cost, plan_sup_distance

SCALE = 10**12  # masses are rounded to multiples of 1e-12 before any flow computation


class UnbalancedError(ValueError):
    pass


@dataclass
class SolveResult:
    plan: TransportPlan
    value: float
    diagnostics: dict = field(default_factory=dict)
    # dual potentials over the full point set (nan off the supports)
    phi: np.ndarray | None = None
    psi: np.ndarray | None = None


def _check_pair(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float) -> None:
    if mu.space is not nu.space:
        raise ValueError("measures live on different spaces")
    if abs(mu.total - nu.total) > tol:
        raise UnbalancedError(f"unbalanced: total masses {mu.total!r} vs {nu.total!r}")


def _quantize(mu: DiscreteMeasure, nu: DiscreteMeasure, balance: bool):
    s, t = mu.support, nu.support
    a = np.rint(mu.weights[s] * SCALE).astype(np.int64)
    b = np.rint(nu.weights[t] * SCALE).astype(np.int64)
    if balance:
        diff = int(a.sum() - b.sum())
        if diff > 0:
            a[int(np.argmax(a))] -= diff
        elif diff < 0:
            b[int(np.argmax(b))] += diff
    return s, t, a, b


def _plan_from_flow(mu, nu, s, t, flow, tol) -> TransportPlan:
    r, c = np.nonzero(flow)
    return TransportPlan(mu, nu, s[r], t[c], flow[r, c] / SCALE, tol=tol)


def solve_cost(
    mu: DiscreteMeasure, nu: DiscreteMeasure, h: CostFunction, tol: float = TOL
) -> SolveResult:
    """Optimal coupling for the cost h(dist) by min-cost flow, certified by its dual."""
    _check_pair(mu, nu, tol)
    s, t, a, b = _quantize(mu, nu, balance=True)
    cost = np.ascontiguousarray(h(mu.space.dist[np.ix_(s, t)]), dtype=float)
    flow, u_pot, v_pot, n_aug = _flow.min_cost_flow(cost, a, b)
    plan = _plan_from_flow(mu, nu, s, t, flow, tol=max(tol, 1e-10))

    phi_s, psi_t = -u_pot, v_pot
    ctol = 1e-9 * max(1.0, float(np.abs(cost).max(initial=0.0)))
    slack = cost - phi_s[:, None] - psi_t[None, :]
    used = flow > 0
    feasibility_violation = float(max(0.0, -slack.min(initial=0.0)))
    tightness_violation = float(np.abs(slack[used]).max(initial=0.0))
    if feasibility_violation > ctol or tightness_violation > ctol:
        raise RuntimeError(
            "min-cost flow failed its dual certificate "
            f"(infeasibility {feasibility_violation:.2e}, slack {tightness_violation:.2e})"
        )
    value = plan_cost(plan, h)
    dual_value = float(phi_s @ mu.weights[s] + psi_t @ nu.weights[t])
    phi = np.full(mu.space.n, np.nan)
    psi = np.full(mu.space.n, np.nan)
    phi[s] = phi_s
    psi[t] = psi_t
    return SolveResult(
        plan,
        value,
        {
            "augmentations": int(n_aug),
            "dual_value": dual_value,
            "duality_gap": value - dual_value,
            "dual_infeasibility": feasibility_violation,
            "complementary_slackness": tightness_violation,
        },
        phi,
        psi,
    )


def solve_wp(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, tol: float = TOL) -> SolveResult:
    if p < 1:
        raise ValueError("W_p needs p >= 1")
    res = solve_cost(mu, nu, CostFunction.power(p), tol)
    res.diagnostics["cost"] = res.value
    res.value = max(res.value, 0.0) ** (1.0 / p)
    return res


def feasible_at(mu: DiscreteMeasure, nu: DiscreteMeasure, t: float, tol: float = TOL):
    """Is there a coupling supported on {dist <= t}?  Returns ``(feasible, witness or None)``.

    Decided by an exact integer max flow; "feasible" means the unrouted mass
    is at most ``tol``.
    """
    _check_pair(mu, nu, tol)
    s, tt, a, b = _quantize(mu, nu, balance=False)
    allowed = mu.space.dist[np.ix_(s, tt)] <= t
    flow, value = _flow.max_flow(allowed, a, b)
    deficit = max(int(a.sum()), int(b.sum())) - int(value)
    if deficit > tol * SCALE:
        return False, None
    return True, _plan_from_flow(mu, nu, s, tt, flow, tol=tol + deficit / SCALE + 1e-10)


def winf_candidates(mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    """Sorted distinct support-to-support distances; W_inf is always one of them."""
    return np.unique(mu.space.dist[np.ix_(mu.support, nu.support)])


def solve_winf(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = TOL) -> SolveResult:
    _check_pair(mu, nu, tol)
    cand = winf_candidates(mu, nu)
    lo, hi = 0, cand.size - 1
    ok, witness = feasible_at(mu, nu, cand[hi], tol)
    steps = 1
    if not ok:
        raise RuntimeError("no coupling found at the largest threshold")
    while lo < hi:
        mid = (lo + hi) // 2
        ok, plan = feasible_at(mu, nu, cand[mid], tol)
        steps += 1
        if ok:
            hi, witness = mid, plan
        else:
            lo = mid + 1
    if witness is None or plan_sup_distance(witness, tol) > cand[hi]:
        _, witness = feasible_at(mu, nu, cand[hi], tol)
    return SolveResult(witness, float(cand[hi]), {"threshold_steps": steps, "candidates": int(cand.size)})


# -- oracles ---------------------------------------------------------------------------

ORACLE_MAX_SUPPORT = 6


def oracle_winf(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = TOL) -> float:
    """W_inf by Hall's condition over every subset of the source support."""
    _check_pair(mu, nu, tol)
    s, t = list(mu.support), list(nu.support)
    if len(s) > ORACLE_MAX_SUPPORT or len(t) > ORACLE_MAX_SUPPORT:
        raise ValueError("oracle scale exceeded")
    d = mu.space.dist
    thresholds = sorted({float(d[i, j]) for i in s for j in t})
    subsets = [c for k in range(1, len(s) + 1) for c in itertools.combinations(s, k)]
    for thr in thresholds:
        ok = True
        for S in subsets:
            nbhd = {j for j in t if any(d[i, j] <= thr for i in S)}
            if sum(nu.weights[j] for j in nbhd) < sum(mu.weights[i] for i in S) - tol:
                ok = False
                break
        if ok:
            return thr
    raise RuntimeError("Hall's condition failed at every threshold")


def oracle_cost_vertices(
    mu: DiscreteMeasure, nu: DiscreteMeasure, h: CostFunction, tol: float = TOL
) -> float:
    """Minimum of the linear cost over the vertices of the transport polytope.

    Enumerates every basis of ``m + n - 1`` cells; meant for supports of size <= 3.
    """
    _check_pair(mu, nu, tol)
    s, t = mu.support, nu.support
    m, n = s.size, t.size
    if m > 4 or n > 4:
        raise ValueError("oracle scale exceeded")
    cells = [(i, j) for i in range(m) for j in range(n)]
    A = np.zeros((m + n, m * n))
    for k, (i, j) in enumerate(cells):
        A[i, k] = 1.0
        A[m + j, k] = 1.0
    rhs = np.concatenate([mu.weights[s], nu.weights[t]])
    cost = h(mu.space.dist[np.ix_(s, t)]).ravel()
    best = np.inf
    for basis in itertools.combinations(range(m * n), m + n - 1):
        B = A[:, basis]
        if np.linalg.matrix_rank(B) < m + n - 1:
            continue
        x, *_ = np.linalg.lstsq(B, rhs, rcond=None)
        if np.abs(B @ x - rhs).max() > 1e-10 or x.min() < -1e-12:
            continue
        best = min(best, float(cost[list(basis)] @ x))
    return best
