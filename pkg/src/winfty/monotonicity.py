"""Cyclical-monotonicity search over plan supports, and the partial-collapse plan family."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .costs import CostFunction
from .space import TOL, DiscreteMeasure, TransportPlan


@dataclass
class CycleViolation:
    points: list[tuple[int, int]]
    # sigma[k] is the target slot sent to source k after the reshuffle
    sigma: list[int]
    gain: float

    def to_json(self) -> dict:
        return {"points": [list(p) for p in self.points], "sigma": self.sigma, "gain": self.gain}


def _shift_gain(c: np.ndarray, idx: tuple[int, ...]) -> float:
    k = len(idx)
    cur = sum(c[idx[a], idx[a]] for a in range(k))
    new = sum(c[idx[a], idx[(a + 1) % k]] for a in range(k))
    return float(cur - new)


def check_cyclical_monotonicity(
    plan: TransportPlan,
    h: CostFunction,
    K: int = 4,
    max_entries: int = 15,
    samples: int = 20000,
    seed: int = 0,
    tol: float = TOL,
) -> CycleViolation | None:
    """First cyclic reshuffle of <= K plan-support pairs that lowers the cost by more than ``tol``.

    Exhaustive over ordered tuples when the plan has at most ``max_entries``
    support entries, otherwise ``samples`` random tuples drawn with ``seed``.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    xs = plan.rows[plan.mass > tol]
    ys = plan.cols[plan.mass > tol]
    n = xs.size
    # c[a, b] = cost of sending source of entry a to target of entry b
    c = h(plan.space.dist[np.ix_(xs, ys)])

    def violation(idx):
        g = _shift_gain(c, idx)
        if g > tol:
            k = len(idx)
            return CycleViolation(
                [(int(xs[a]), int(ys[a])) for a in idx], [(a + 1) % k for a in range(k)], g
            )
        return None

    if n <= max_entries:
        for k in range(2, min(K, n) + 1):
            for combo in itertools.combinations(range(n), k):
                # fix the first element to avoid rotations of the same cycle
                for rest in itertools.permutations(combo[1:]):
                    v = violation((combo[0],) + rest)
                    if v is not None:
                        return v
        return None
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        k = int(rng.integers(2, min(K, n) + 1))
        v = violation(tuple(int(a) for a in rng.choice(n, size=k, replace=False)))
        if v is not None:
            return v
    return None


def build_collapse_plan(mu: DiscreteMeasure, A, y: int, t: float, tol: float = TOL) -> TransportPlan:
    """Identity plan with a fraction t/mu(A) of every atom in A redirected to y."""
    A = sorted({int(a) for a in A})
    if y not in set(mu.support.tolist()):
        raise ValueError("y must lie in supp mu")
    mA = mu.mass(A)
    if not 0 < t < mA:
        raise ValueError(f"t = {t!r} outside (0, mu(A) = {mA!r})")
    frac = t / mA
    w = mu.weights.copy()
    w[A] *= 1 - frac
    w[y] += t
    nu = DiscreteMeasure(mu.space, w, mu.total, mu.tol)
    entries: dict[tuple[int, int], float] = {}
    for z in mu.support:
        z = int(z)
        keep = mu.weights[z] * (1 - frac) if z in A else mu.weights[z]
        entries[(z, z)] = entries.get((z, z), 0.0) + keep
        if z in A:
            entries[(z, y)] = entries.get((z, y), 0.0) + mu.weights[z] * frac
    return TransportPlan.from_entries(mu, nu, [(a, b, m) for (a, b), m in sorted(entries.items()) if m > 0], tol=tol)
