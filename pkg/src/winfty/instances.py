"""Instance families: lines, grids, snowflaked lines, clustered clouds and Cantor endpoints."""
from __future__ import annotations

import numpy as np

from .space import DiscreteMeasure, MetricSpace

KINDS = ("line", "grid", "snowflake", "clusters", "cantor")


def line_space(n: int, length: float | None = None) -> MetricSpace:
    """n equally spaced points on [0, length]; spacing 1 by default."""
    if n < 1:
        raise ValueError("n must be at least 1")
    length = float(n - 1) if length is None else float(length)
    return MetricSpace.from_points(np.linspace(0.0, length, n))


def snowflake_space(n: int, s: float, length: float = 1.0) -> MetricSpace:
    """Uniform grid on [0, length] with distance |x - y| ** (1/s)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not s >= 1:
        raise ValueError("snowflake exponent s must be >= 1")
    x = np.linspace(0.0, length, n)
    return MetricSpace(np.abs(x[:, None] - x[None, :]) ** (1.0 / s))


def grid_space(nx: int, ny: int, spacing: float = 1.0) -> MetricSpace:
    if nx < 1 or ny < 1:
        raise ValueError("grid dimensions must be positive")
    xs, ys = np.meshgrid(np.arange(nx) * spacing, np.arange(ny) * spacing, indexing="ij")
    return MetricSpace.from_points(np.column_stack([xs.ravel(), ys.ravel()]))


def cluster_space(k: int, size: int, separation: float = 5.0, spread: float = 0.5, seed: int = 0) -> MetricSpace:
    """k clusters of ``size`` points in the plane, centres ``separation`` apart on a line."""
    if k < 1 or size < 1 or spread < 0:
        raise ValueError("clusters need k >= 1, size >= 1, spread >= 0")
    rng = np.random.default_rng(seed)
    pts = [np.array([c * separation, 0.0]) + spread * rng.uniform(-1, 1, (size, 2)) for c in range(k)]
    return MetricSpace.from_points(np.concatenate(pts))


def cantor_points(level: int) -> np.ndarray:
    """Left endpoints of the 2**level intervals of the middle-thirds construction."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    pts = np.array([0.0])
    for k in range(1, level + 1):
        pts = np.concatenate([pts, pts + 2.0 * 3.0**-k])
    return np.sort(pts)


def generate_instance(kind: str, seed: int = 0, weights: str = "uniform", **params) -> tuple[MetricSpace, DiscreteMeasure]:
    """Build a space of the given kind and a measure on all of its points.

    ``weights`` is "uniform" or "random" (Dirichlet(1) draws from ``seed``).
    """
    if kind == "line":
        space = line_space(int(params.get("n", 10)), params.get("length"))
    elif kind == "grid":
        space = grid_space(int(params.get("nx", 5)), int(params.get("ny", 5)), float(params.get("spacing", 1.0)))
    elif kind == "snowflake":
        space = snowflake_space(int(params.get("n", 101)), float(params.get("s", 1.5)), float(params.get("length", 1.0)))
    elif kind == "clusters":
        space = cluster_space(
            int(params.get("k", 2)),
            int(params.get("size", 5)),
            float(params.get("separation", 5.0)),
            float(params.get("spread", 0.5)),
            seed,
        )
    elif kind == "cantor":
        space = MetricSpace.from_points(cantor_points(int(params.get("level", 3))))
    else:
        raise ValueError(f"unknown instance kind {kind!r}; expected one of {', '.join(KINDS)}")
    if weights == "uniform":
        mu = DiscreteMeasure.uniform(space)
    elif weights == "random":
        mu = DiscreteMeasure(space, np.random.default_rng(seed).dirichlet(np.ones(space.n)))
    else:
        raise ValueError("weights must be 'uniform' or 'random'")
    return space, mu
