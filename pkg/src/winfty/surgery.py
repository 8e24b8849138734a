"""Re-routing a coupling into one with explicitly bounded displacement.

Given a coupling whose long-haul mass (displacement >= r) is below half the
smallest r-ball mass, the net/cell construction below produces a coupling of
the same marginals whose every entry moves at most 17r + 4*eps + delta.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .space import (
    TOL,
    BallMassProfile,
    DiscreteMeasure,
    NetPartition,
    TransportPlan,
    ball_mass,
    build_partition,
    delta_components,
    plan_sup_distance,
    separated_net,
)


class SurgeryError(ValueError):
    pass


@dataclass(frozen=True)
class SurgeryParams:
    r: float
    eps: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")
        if self.eps < 0 or self.delta < 0:
            raise ValueError("eps and delta must be nonnegative")

    @property
    def bound(self) -> float:
        return 17 * self.r + 4 * self.eps + self.delta


@dataclass
class SurgeryOutput:
    eta: TransportPlan
    params: SurgeryParams
    partition: NetPartition
    # part name -> list of (i, j, mass); names: "short", "chain", "diagonal"
    parts: dict[str, list[tuple[int, int, float]]]
    part_mass: dict[str, float]
    betas: list[float]
    chains: dict[tuple[int, int], list[int]]
    chain_mass: dict[tuple[int, int], float]
    part_sup: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        p = self.params
        return {
            "params": {"r": p.r, "eps": p.eps, "delta": p.delta, "bound": p.bound},
            "net": list(self.partition.net),
            "cell_of": {str(k): v for k, v in sorted(self.partition.cell_of.items())},
            "betas": self.betas,
            "chains": [
                {"from": i, "to": j, "cells": c, "mass": self.chain_mass[(i, j)]}
                for (i, j), c in sorted(self.chains.items())
            ],
            "part_mass": self.part_mass,
            "part_sup_distance": self.part_sup,
            "sup_distance": plan_sup_distance(self.eta),
            "eta": {"entries": [[i, j, m] for i, j, m in self.eta.entries]},
            "parts": {k: [[i, j, m] for i, j, m in v] for k, v in self.parts.items()},
        }


def long_haul_mass(plan: TransportPlan, r: float) -> float:
    return float(plan.mass[plan.distances() >= r].sum())


def check_assumption(lam: TransportPlan, m: BallMassProfile, r: float) -> tuple[bool, float]:
    """``(holds, margin)`` with margin = m(r)/2 - lam(dist >= r); holds iff margin > 0."""
    margin = m(r) / 2 - long_haul_mass(lam, r)
    return bool(margin > 0), float(margin)


def _cell_graph(part: NetPartition, mu: DiscreteMeasure, delta: float, tol: float) -> list[list[int]]:
    supp = set(int(i) for i in mu.support)
    members = [[p for p in cell if p in supp] for cell in part.cells()]
    d = part.space.dist
    adj: list[list[int]] = [[] for _ in members]
    for k in range(len(members)):
        for l in range(k + 1, len(members)):
            if members[k] and members[l] and d[np.ix_(members[k], members[l])].min() <= delta + tol:
                adj[k].append(l)
                adj[l].append(k)
    return adj


def _bfs_depth(adj: list[list[int]], source: int) -> list[int]:
    depth = [-1] * len(adj)
    depth[source] = 0
    queue = deque([source])
    while queue:
        k = queue.popleft()
        for l in adj[k]:
            if depth[l] < 0:
                depth[l] = depth[k] + 1
                queue.append(l)
    return depth


def build_cell_chain(
    part: NetPartition, i: int, j: int, delta: float, mu: DiscreteMeasure, tol: float = TOL, _adj=None
) -> list[int]:
    """Fewest-cell chain i -> j through cells whose mu-supports are delta-close.

    Among shortest chains the lexicographically smallest is returned.
    """
    if i == j:
        return [i]
    adj = _adj if _adj is not None else _cell_graph(part, mu, delta, tol)
    depth = _bfs_depth(adj, j)
    if depth[i] < 0:
        raise SurgeryError("support not delta-connected across cells")
    chain = [i]
    k = i
    while k != j:
        k = min(l for l in adj[k] if depth[l] == depth[k] - 1)
        chain.append(k)
    return chain


def _product(rows, row_w, cols, col_w, mass, acc: dict) -> None:
    block = mass * np.outer(row_w / row_w.sum(), col_w / col_w.sum())
    for a, x in enumerate(rows):
        for b, y in enumerate(cols):
            if block[a, b] > 0:
                acc[(x, y)] = acc.get((x, y), 0.0) + float(block[a, b])


def surgery_transport(
    lam: TransportPlan, params: SurgeryParams, radius_mode: str = "open", tol: float = TOL
) -> SurgeryOutput:
    mu, nu = lam.source, lam.target
    space = mu.space
    r, eps, delta = params.r, params.eps, params.delta
    supp_mu = [int(i) for i in mu.support]
    supp_nu = [int(j) for j in nu.support]

    if len(delta_components(supp_mu, space, delta, tol)) > 1:
        raise SurgeryError(f"supp mu is not {delta:g}-connected")
    m = ball_mass(mu, radius_mode)
    holds, margin = check_assumption(lam, m, r)
    if not holds:
        raise SurgeryError(f"long-haul mass too large (margin {margin:.3e})")

    net = separated_net(supp_mu, space, r)
    part = build_partition(net, sorted(set(supp_mu) | set(supp_nu)), supp_mu, eps, tol)
    N = len(part.net)
    cell = part.cell_of
    cells = part.cells()
    mu_rows = [[p for p in c if mu.weights[p] > tol] for c in cells]
    nu_cols = [[p for p in c if nu.weights[p] > tol] for c in cells]
    mu_cell = np.array([mu.weights[c].sum() for c in mu_rows])
    nu_cell = np.array([nu.weights[c].sum() for c in nu_cols])

    short = np.zeros((N, N))
    long = np.zeros((N, N))
    for x, y, w, dxy in zip(lam.rows, lam.cols, lam.mass, lam.distances()):
        if dxy >= r:
            long[cell[int(x)], cell[int(y)]] += w
        else:
            short[cell[int(x)], cell[int(y)]] += w

    adj = _cell_graph(part, mu, delta, tol)
    chains: dict[tuple[int, int], list[int]] = {}
    chain_mass: dict[tuple[int, int], float] = {}
    out_tilde = np.zeros(N)
    for i in range(N):
        for j in range(N):
            if i == j or long[i, j] <= 0:
                continue
            chain = build_cell_chain(part, i, j, delta, mu, tol, _adj=adj)
            chains[(i, j)] = chain
            chain_mass[(i, j)] = float(long[i, j])
            for k in chain[:-1]:
                out_tilde[k] += long[i, j]
            for k in chain[1:]:
                if nu_cell[k] <= 0:
                    raise SurgeryError(f"empty target cell {k} on chain {chain}")

    betas = mu_cell - (short.sum(axis=1) - np.diag(short)) - out_tilde
    for k, b in enumerate(betas):
        if b < -tol:
            raise RuntimeError(f"negative diagonal mass beta[{k}] = {b:.3e}")
    betas = np.where(betas < tol, 0.0, betas)

    def block(k, l, w, acc):
        _product(mu_rows[k], mu.weights[mu_rows[k]], nu_cols[l], nu.weights[nu_cols[l]], w, acc)

    short_acc: dict = {}
    chain_acc: dict = {}
    diag_acc: dict = {}
    for i in range(N):
        for j in range(N):
            if i != j and short[i, j] > 0:
                block(i, j, short[i, j], short_acc)
    for (i, j), chain in sorted(chains.items()):
        for k, l in zip(chain[:-1], chain[1:]):
            block(k, l, chain_mass[(i, j)], chain_acc)
    for k in range(N):
        if betas[k] > 0:
            if nu_cell[k] <= 0:
                raise SurgeryError(f"empty target cell {k} with diagonal mass {betas[k]:.3e}")
            block(k, k, betas[k], diag_acc)

    total: dict = {}
    for acc in (short_acc, chain_acc, diag_acc):
        for key, w in acc.items():
            total[key] = total.get(key, 0.0) + w
    eta = TransportPlan.from_entries(mu, nu, [(x, y, w) for (x, y), w in sorted(total.items())], tol=tol)

    parts = {
        name: [(x, y, w) for (x, y), w in sorted(acc.items())]
        for name, acc in (("short", short_acc), ("chain", chain_acc), ("diagonal", diag_acc))
    }
    d = space.dist
    part_sup = {
        name: max((float(d[x, y]) for x, y, w in entries if w > tol), default=0.0)
        for name, entries in parts.items()
    }
    out = SurgeryOutput(
        eta,
        params,
        part,
        parts,
        {name: float(sum(w for *_, w in entries)) for name, entries in parts.items()},
        [float(b) for b in betas],
        chains,
        chain_mass,
        part_sup,
    )
    if plan_sup_distance(eta, tol) > params.bound:
        raise RuntimeError("surgery output exceeds its displacement bound")
    return out


def winf_upper_bound_via_surgery(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    lam: TransportPlan,
    delta: float,
    eps: float = 0.0,
    radius_mode: str = "open",
    tol: float = TOL,
) -> tuple[float, float | None]:
    """Smallest 17r + 4eps + delta over breakpoint radii r where the surgery applies.

    Candidate radii are the positive breakpoints of the ball-mass profile and
    the displacements used by ``lam``.  Returns ``(bound, r)``, or
    ``(inf, None)`` when no candidate qualifies.
    """
    if lam.source is not mu or lam.target is not nu:
        raise ValueError("plan does not couple the given measures")
    if len(delta_components(mu.support, mu.space, delta, tol)) > 1:
        raise SurgeryError(f"supp mu is not {delta:g}-connected")
    m = ball_mass(mu, radius_mode)
    cand = np.unique(np.concatenate([m.breakpoints, lam.distances()]))
    for r in cand[cand > 0]:
        if check_assumption(lam, m, float(r))[0]:
            return 17 * float(r) + 4 * eps + delta, float(r)
    return math.inf, None
