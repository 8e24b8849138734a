"""Finite metric spaces, measures, couplings and the geometric primitives on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .costs import CostFunction

TOL = 1e-9


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class MetricSpace:
    dist: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        d = _frozen(self.dist)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {d.shape}")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distances must be finite and nonnegative")
        object.__setattr__(self, "dist", d)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != d.shape[0]:
                raise ValueError("labels length does not match point count")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @classmethod
    def from_points(cls, coords, labels=None) -> "MetricSpace":
        """Euclidean distances between rows of ``coords`` (or a 1-d array of reals)."""
        x = np.asarray(coords, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        diff = x[:, None, :] - x[None, :, :]
        return cls(np.sqrt((diff ** 2).sum(-1)), labels)

    def diameter(self, idx: Sequence[int] | None = None) -> float:
        if idx is None:
            return float(self.dist.max()) if self.n else 0.0
        idx = np.asarray(idx, dtype=int)
        return float(self.dist[np.ix_(idx, idx)].max()) if idx.size else 0.0

    def point_set_distance(self, A, B) -> float:
        A = np.asarray(A, dtype=int)
        B = np.asarray(B, dtype=int)
        return float(self.dist[np.ix_(A, B)].min())


@dataclass
class ValidationReport:
    diagonal: list[int] = field(default_factory=list)
    symmetry: list[tuple[int, int]] = field(default_factory=list)
    triangle: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (self.diagonal or self.symmetry or self.triangle)


def validate_space(space: MetricSpace, tol: float = TOL) -> ValidationReport:
    """List every diagonal, symmetry and triangle violation; an empty report means valid.

    Triangle violations are reported as ``(i, j, k)`` with
    ``dist[i, k] > dist[i, j] + dist[j, k] + tol``.
    """
    d = space.dist
    report = ValidationReport()
    report.diagonal = [int(i) for i in np.flatnonzero(np.abs(np.diag(d)) > tol)]
    iu, ju = np.nonzero(np.triu(np.abs(d - d.T) > tol, 1))
    report.symmetry = [(int(i), int(j)) for i, j in zip(iu, ju)]
    for j in range(space.n):
        bad = d > d[:, j][:, None] + d[j, :][None, :] + tol
        for i, k in zip(*np.nonzero(bad)):
            report.triangle.append((int(i), j, int(k)))
    report.triangle.sort()
    return report


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative weights on the points of a space; ``total`` need not be 1."""

    space: MetricSpace
    weights: np.ndarray
    total: float | None = None
    tol: float = TOL

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.space.n,):
            raise ValueError(f"expected {self.space.n} weights, got shape {w.shape}")
        if np.any(w < -self.tol) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        w = np.clip(w, 0.0, None)
        total = float(w.sum()) if self.total is None else float(self.total)
        if abs(w.sum() - total) > self.tol:
            raise ValueError(f"weights sum to {w.sum()!r}, declared total {total!r}")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "total", total)

    @classmethod
    def from_atoms(cls, space: MetricSpace, atoms: dict[int, float]) -> "DiscreteMeasure":
        w = np.zeros(space.n)
        for i, m in atoms.items():
            w[i] += m
        return cls(space, w)

    @classmethod
    def uniform(cls, space: MetricSpace, idx: Iterable[int] | None = None) -> "DiscreteMeasure":
        idx = list(range(space.n)) if idx is None else list(idx)
        w = np.zeros(space.n)
        w[idx] = 1.0 / len(idx)
        return cls(space, w)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > self.tol)

    def mass(self, idx) -> float:
        return float(self.weights[np.asarray(idx, dtype=int)].sum())

    def restrict(self, idx) -> "DiscreteMeasure":
        w = np.zeros(self.space.n)
        idx = np.asarray(idx, dtype=int)
        w[idx] = self.weights[idx]
        return DiscreteMeasure(self.space, w, tol=self.tol)

    def normalized(self) -> "DiscreteMeasure":
        return DiscreteMeasure(self.space, self.weights / self.total, tol=self.tol)


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse coupling; entries are sorted (row, col) pairs with positive mass."""

    source: DiscreteMeasure
    target: DiscreteMeasure
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    validate: bool = True
    tol: float = TOL

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=int)
        cols = np.asarray(self.cols, dtype=int)
        mass = np.asarray(self.mass, dtype=float)
        if not (rows.shape == cols.shape == mass.shape):
            raise ValueError("rows, cols and mass must have equal length")
        if self.source.space is not self.target.space:
            raise ValueError("source and target must live on the same space")
        if np.any(mass <= 0):
            raise ValueError("plan entries must carry positive mass")
        order = np.lexsort((cols, rows))
        rows, cols, mass = rows[order], cols[order], mass[order]
        if rows.size > 1 and np.any((np.diff(rows) == 0) & (np.diff(cols) == 0)):
            raise ValueError("duplicate (i, j) entries in plan")
        object.__setattr__(self, "rows", _frozen(rows, int))
        object.__setattr__(self, "cols", _frozen(cols, int))
        object.__setattr__(self, "mass", _frozen(mass))
        if self.validate:
            err = self.marginal_error()
            if err > self.tol:
                raise ValueError(f"plan marginals off by {err:.3e} (tol {self.tol:g})")

    @classmethod
    def from_dense(cls, source, target, matrix, **kw) -> "TransportPlan":
        matrix = np.asarray(matrix, dtype=float)
        r, c = np.nonzero(matrix > 0)
        return cls(source, target, r, c, matrix[r, c], **kw)

    @classmethod
    def from_entries(cls, source, target, entries, **kw) -> "TransportPlan":
        acc: dict[tuple[int, int], float] = {}
        for i, j, m in entries:
            acc[(int(i), int(j))] = acc.get((int(i), int(j)), 0.0) + float(m)
        keys = [k for k, v in acc.items() if v > 0]
        return cls(
            source,
            target,
            [k[0] for k in keys],
            [k[1] for k in keys],
            [acc[k] for k in keys],
            **kw,
        )

    @classmethod
    def identity(cls, mu: DiscreteMeasure) -> "TransportPlan":
        s = mu.support
        return cls(mu, mu, s, s, mu.weights[s])

    @property
    def space(self) -> MetricSpace:
        return self.source.space

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(m)) for i, j, m in zip(self.rows, self.cols, self.mass)]

    def to_dense(self) -> np.ndarray:
        n = self.space.n
        out = np.zeros((n, n))
        np.add.at(out, (self.rows, self.cols), self.mass)
        return out

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, self.mass, minlength=self.space.n)

    def col_sums(self) -> np.ndarray:
        return np.bincount(self.cols, self.mass, minlength=self.space.n)

    def marginal_error(self) -> float:
        return float(
            max(
                np.abs(self.row_sums() - self.source.weights).max(initial=0.0),
                np.abs(self.col_sums() - self.target.weights).max(initial=0.0),
            )
        )

    def distances(self) -> np.ndarray:
        return self.space.dist[self.rows, self.cols]


def plan_cost(plan: TransportPlan, h: CostFunction) -> float:
    return float(np.dot(plan.mass, h(plan.distances())))


def plan_sup_distance(plan: TransportPlan, tol: float = TOL) -> float:
    """Largest displacement among entries carrying more than ``tol`` mass."""
    d = plan.distances()[plan.mass > tol]
    return float(d.max()) if d.size else 0.0


# -- ball masses -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BallMassProfile:
    """Step function t -> inf over support centres of mu(B(x, t)).

    ``values[k]`` is the smallest mass of a closed ball of radius
    ``breakpoints[k]``; it is the profile value on ``(b_k, b_{k+1}]`` for open
    balls and on ``[b_k, b_{k+1})`` for closed balls.
    """

    measure: DiscreteMeasure
    breakpoints: np.ndarray
    values: np.ndarray
    closed: bool = False
    centers: np.ndarray = field(default=None, repr=False)  # per-breakpoint argmin centre

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        side = "right" if self.closed else "left"
        k = np.searchsorted(self.breakpoints, t, side=side) - 1
        out = np.where(k >= 0, self.values[np.clip(k, 0, None)], 0.0)
        return out if out.ndim else float(out)

    def ball_masses(self, t: float) -> np.ndarray:
        """mu(B(x, t)) for every support point x, aligned with ``measure.support``."""
        mu = self.measure
        s = mu.support
        d = mu.space.dist[np.ix_(s, s)]
        inside = d <= t if self.closed else d < t
        return inside.astype(float) @ mu.weights[s]

    def minimizing_center(self, t: float) -> int:
        masses = self.ball_masses(t)
        return int(self.measure.support[int(np.argmin(masses))])


def ball_mass(mu: DiscreteMeasure, radius_mode: str = "open") -> BallMassProfile:
    if radius_mode not in ("open", "closed"):
        raise ValueError("radius_mode must be 'open' or 'closed'")
    s = mu.support
    if s.size == 0 or mu.total <= 0:
        raise ValueError("empty measure")
    d = mu.space.dist[np.ix_(s, s)]
    w = mu.weights[s]
    breaks = np.unique(d)
    order = np.argsort(d, axis=1, kind="stable")
    sorted_d = np.take_along_axis(d, order, axis=1)
    cum = np.cumsum(w[order], axis=1)
    per_center = np.empty((s.size, breaks.size))
    for x in range(s.size):
        k = np.searchsorted(sorted_d[x], breaks, side="right") - 1
        per_center[x] = cum[x, k]
    arg = np.argmin(per_center, axis=0)
    values = per_center[arg, np.arange(breaks.size)]
    return BallMassProfile(
        mu, _frozen(breaks), _frozen(values), radius_mode == "closed", _frozen(s[arg], int)
    )


# -- sets ------------------------------------------------------------------------


def hausdorff_distance(A, B, space: MetricSpace) -> float:
    A = np.asarray(list(A), dtype=int)
    B = np.asarray(list(B), dtype=int)
    if A.size == 0 or B.size == 0:
        raise ValueError("Hausdorff distance of an empty set")
    d = space.dist[np.ix_(A, B)]
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def delta_components(carrier, space: MetricSpace, delta: float, tol: float = TOL) -> list[list[int]]:
    """Maximal delta-connected pieces of ``carrier``, each sorted, ordered by smallest member."""
    idx = np.asarray(sorted(set(int(i) for i in carrier)), dtype=int)
    if idx.size == 0:
        return []
    adj = space.dist[np.ix_(idx, idx)] <= delta + tol
    if delta <= 0:
        # only coincident points chain together at scale 0
        adj = space.dist[np.ix_(idx, idx)] <= tol
    _, labels = connected_components(adj.astype(np.int8), directed=False)
    groups: dict[int, list[int]] = {}
    for point, lab in zip(idx, labels):
        groups.setdefault(int(lab), []).append(int(point))
    return sorted(groups.values(), key=lambda g: g[0])


def connectivity_scale(carrier, space: MetricSpace) -> float:
    """Smallest delta making ``carrier`` delta-connected (longest minimum-spanning-tree edge)."""
    from scipy.sparse.csgraph import minimum_spanning_tree

    idx = np.asarray(sorted(set(int(i) for i in carrier)), dtype=int)
    if idx.size <= 1:
        return 0.0
    d = space.dist[np.ix_(idx, idx)]
    # csgraph treats exact zeros as missing edges
    tree = minimum_spanning_tree(np.where(d > 0, d, 1e-300))
    return float(tree.data.max()) if tree.nnz else 0.0


# -- nets and partitions ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NetPartition:
    space: MetricSpace
    net: tuple[int, ...]
    r: float
    eps: float = 0.0
    carrier: tuple[int, ...] = ()
    cell_of: dict[int, int] = field(default_factory=dict)

    def cell(self, k: int) -> list[int]:
        return [p for p in self.carrier if self.cell_of[p] == k]

    def cells(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.net]
        for p in self.carrier:
            out[self.cell_of[p]].append(p)
        return out


def separated_net(carrier, space: MetricSpace, r: float) -> NetPartition:
    """Greedy maximal 4r-separated net, scanning the carrier in ascending index order."""
    if r <= 0:
        raise ValueError("net radius must be positive")
    pts = sorted(set(int(i) for i in carrier))
    if not pts:
        raise ValueError("empty carrier")
    net: list[int] = []
    for p in pts:
        if all(space.dist[p, q] > 4 * r for q in net):
            net.append(p)
    return NetPartition(space, tuple(net), float(r))


def build_partition(
    net: NetPartition, carrier, support, eps: float = 0.0, tol: float = TOL
) -> NetPartition:
    """Assign each carrier point to its nearest net point (lowest net index on ties).

    ``support`` is supp(mu); every carrier point must lie within ``eps`` of it.
    """
    space = net.space
    pts = sorted(set(int(i) for i in carrier))
    supp = np.asarray(sorted(set(int(i) for i in support)), dtype=int)
    centers = np.asarray(net.net, dtype=int)
    if pts:
        reach = space.dist[np.ix_(pts, supp)].min(axis=1)
        far = [p for p, d in zip(pts, reach) if d > eps + tol]
        if far:
            raise ValueError(f"carrier outside eps-neighborhood: points {far}")
    cell_of = {}
    for p in pts:
        d = space.dist[p, centers]
        cell_of[p] = int(np.flatnonzero(d <= d.min() + tol)[0])
    return NetPartition(space, net.net, net.r, float(eps), tuple(pts), cell_of)
