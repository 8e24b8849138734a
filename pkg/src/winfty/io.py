"""JSON readers and writers for spaces, measures and plans."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .space import TOL, DiscreteMeasure, MetricSpace, TransportPlan


class InputError(Exception):
    """Unreadable or malformed input file; the message names the file."""


def _read(path) -> object:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: cannot read ({e.strerror or e})") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e


def _field(obj, key, path):
    if not isinstance(obj, dict) or key not in obj:
        raise InputError(f"{path}: missing field {key!r}")
    return obj[key]


def space_from_json(obj, path="<metric>") -> MetricSpace:
    dist = _field(obj, "dist", path)
    try:
        space = MetricSpace(np.asarray(dist, dtype=float), obj.get("labels"))
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: {e}") from e
    if "n" in obj and obj["n"] != space.n:
        raise InputError(f"{path}: n = {obj['n']} but dist is {space.n}x{space.n}")
    return space


def space_to_json(space: MetricSpace) -> dict:
    out = {"n": space.n, "dist": space.dist.tolist()}
    if space.labels is not None:
        out["labels"] = list(space.labels)
    return out


def measure_from_json(obj, space: MetricSpace, path="<measure>", tol: float = TOL) -> DiscreteMeasure:
    w = _field(obj, "weights", path)
    try:
        return DiscreteMeasure(space, np.asarray(w, dtype=float), obj.get("total"), tol)
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: {e}") from e


def measure_to_json(mu: DiscreteMeasure) -> dict:
    return {"weights": mu.weights.tolist(), "total": mu.total}


def plan_from_json(obj, space: MetricSpace, path="<plan>", source=None, target=None, tol: float = TOL) -> TransportPlan:
    """Marginals default to the plan's own row and column sums."""
    entries = _field(obj, "entries", path)
    try:
        entries = [(int(i), int(j), float(m)) for i, j, m in entries]
        if any(not 0 <= i < space.n or not 0 <= j < space.n for i, j, _ in entries):
            raise ValueError("entry index out of range")
        rows = np.zeros(space.n)
        cols = np.zeros(space.n)
        for i, j, m in entries:
            rows[i] += m
            cols[j] += m
        source = source or DiscreteMeasure(space, rows, tol=tol)
        target = target or DiscreteMeasure(space, cols, tol=tol)
        return TransportPlan.from_entries(source, target, entries, tol=tol)
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: {e}") from e


def plan_to_json(plan: TransportPlan) -> dict:
    return {"entries": [[i, j, m] for i, j, m in plan.entries]}


def load_space(path) -> MetricSpace:
    return space_from_json(_read(path), path)


def load_measure(path, space: MetricSpace, tol: float = TOL) -> DiscreteMeasure:
    return measure_from_json(_read(path), space, path, tol)


def load_plan(path, space: MetricSpace, source=None, target=None, tol: float = TOL) -> TransportPlan:
    return plan_from_json(_read(path), space, path, source, target, tol)


def load_json(path) -> object:
    return _read(path)


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_text(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: cannot write ({e.strerror or e})") from e
