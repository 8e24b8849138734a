"""Cost profiles h: [0, inf) -> [0, inf) applied to distances."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import PchipInterpolator

FAMILIES = ("power", "shifted-power", "snowflake-power", "tabulated")


@dataclass(frozen=True)
class CostFunction:
    """Nondecreasing cost profile, h(t) > 0 for t > 0.

    Families and parameters:

    * ``power``: ``p >= 1``, h(t) = t**p
    * ``shifted-power``: ``a > 0, p > 0, b >= 0``, h(t) = a*t**p + b*[t > 0]
    * ``snowflake-power``: ``p > 0, s > 0``, h(t) = t**(p/s)
    * ``tabulated``: ``knots`` (increasing t, starting at 0) and ``values``
      (nondecreasing), interpolated with a shape-preserving cubic and
      extended linearly past the last knot.
    """

    family: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown cost family {self.family!r}")
        p = self.params
        if self.family == "power":
            if p.get("p", 0) < 1:
                raise ValueError("power cost needs p >= 1")
        elif self.family == "shifted-power":
            if p.get("a", 1.0) <= 0 or p.get("p", 0) <= 0 or p.get("b", 0.0) < 0:
                raise ValueError("shifted-power needs a > 0, p > 0, b >= 0")
        elif self.family == "snowflake-power":
            if p.get("p", 0) <= 0 or p.get("s", 0) <= 0:
                raise ValueError("snowflake-power needs p > 0 and s > 0")
        else:
            knots = np.asarray(p.get("knots", ()), dtype=float)
            values = np.asarray(p.get("values", ()), dtype=float)
            if knots.size < 2 or knots.shape != values.shape:
                raise ValueError("tabulated cost needs matching knots/values, at least 2")
            if knots[0] != 0.0 or np.any(np.diff(knots) <= 0):
                raise ValueError("tabulated knots must start at 0 and increase")
            if np.any(np.diff(values) < 0) or values[0] < 0 or np.any(values[1:] <= 0):
                raise ValueError("tabulated values must be nondecreasing, >= 0, and > 0 after t=0")
            object.__setattr__(self, "_spline", PchipInterpolator(knots, values, extrapolate=False))
        grid = np.linspace(0.0, 4.0, 401)
        vals = self(grid)
        if np.any(np.diff(vals) < -1e-12) or vals[0] < 0 or np.any(vals[1:] <= 0):
            raise ValueError(f"cost {self.describe()} is not nondecreasing and positive")

    @classmethod
    def power(cls, p: float) -> "CostFunction":
        return cls("power", {"p": float(p)})

    @classmethod
    def shifted_power(cls, a: float, p: float, b: float) -> "CostFunction":
        return cls("shifted-power", {"a": float(a), "p": float(p), "b": float(b)})

    @classmethod
    def snowflake_power(cls, p: float, s: float) -> "CostFunction":
        return cls("snowflake-power", {"p": float(p), "s": float(s)})

    @classmethod
    def tabulated(cls, knots, values) -> "CostFunction":
        return cls("tabulated", {"knots": [float(k) for k in knots], "values": [float(v) for v in values]})

    @property
    def continuous(self) -> bool:
        # plan-level bounds need a continuous profile
        if self.family == "shifted-power":
            return self.params.get("b", 0.0) == 0.0
        return True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.family == "power":
            return np.power(t, p["p"])
        if self.family == "shifted-power":
            return p.get("a", 1.0) * np.power(t, p["p"]) + p.get("b", 0.0) * (t > 0)
        if self.family == "snowflake-power":
            return np.power(t, p["p"] / p["s"])
        knots = np.asarray(p["knots"])
        values = np.asarray(p["values"])
        out = self._spline(np.clip(t, 0.0, knots[-1]))
        slope = (values[-1] - values[-2]) / (knots[-1] - knots[-2])
        out = np.where(t > knots[-1], values[-1] + slope * (t - knots[-1]), out)
        return np.asarray(out, dtype=float) if out.ndim else float(out)

    def describe(self) -> str:
        if self.family == "power":
            return f"t^{self.params['p']:g}"
        return f"{self.family}({json.dumps(self.params, sort_keys=True)})"

    def to_json(self) -> dict:
        return {"family": self.family, **self.params}


def parse_cost(spec: str) -> CostFunction:
    """Parse ``p:<real>``, an inline JSON object, or a path to a JSON file."""
    spec = spec.strip()
    if spec.startswith("p:"):
        return CostFunction.power(float(spec[2:]))
    if spec.startswith("{"):
        obj = json.loads(spec)
    else:
        with open(spec, encoding="utf-8") as fh:
            obj = json.load(fh)
    if not isinstance(obj, dict) or "family" not in obj:
        raise ValueError(f"cost object needs a 'family' key, one of {', '.join(FAMILIES)}")
    obj = dict(obj)
    family = obj.pop("family")
    return CostFunction(family, obj)
