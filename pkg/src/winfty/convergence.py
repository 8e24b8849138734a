"""Finite-horizon diagnostics for upgrading W_p convergence of a measure sequence to W_inf.

A limit statement cannot be certified from finitely many terms.  Here a
series "tends to 0" when its maximum over the last quarter of the horizon is
below a threshold (default 1e-3); the raw series is always reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .solvers import solve_winf, solve_wp
from .space import (
    TOL,
    DiscreteMeasure,
    MetricSpace,
    ball_mass,
    delta_components,
    hausdorff_distance,
)

THRESHOLD = 1e-3


@dataclass
class MeasureSequence:
    space: MetricSpace
    terms: list[DiscreteMeasure]
    limit: DiscreteMeasure
    name: str = ""
    # suggested scale for automatic splits by connected pieces of supp(limit)
    scale: float | None = None

    def __post_init__(self):
        if not self.terms:
            raise ValueError("empty sequence")
        for mu in [*self.terms, self.limit]:
            if mu.space is not self.space:
                raise ValueError("all measures must share one space")
            if abs(mu.total - 1.0) > 1e-9:
                raise ValueError(f"not a probability measure (total {mu.total!r})")


@dataclass
class Trend:
    values: list[float]
    threshold: float
    tail_start: int  # 1-based index of the first term in the tail window
    tail_max: float

    @property
    def converging(self) -> bool:
        return self.tail_max < self.threshold

    def to_json(self) -> dict:
        return {
            "values": self.values,
            "threshold": self.threshold,
            "tail_start": self.tail_start,
            "tail_max": self.tail_max,
            "converging": self.converging,
        }


def tail_start(n: int) -> int:
    """1-based start of the last-quarter window (at least one term)."""
    return n - max(1, math.ceil(n / 4)) + 1


def _trend(values, threshold) -> Trend:
    values = [float(v) for v in values]
    s = tail_start(len(values))
    return Trend(values, threshold, s, max(values[s - 1 :]))


def diag_wp(seq: MeasureSequence, p: float, threshold: float = THRESHOLD, tol: float = TOL) -> Trend:
    return _trend([solve_wp(mu, seq.limit, p, tol).value for mu in seq.terms], threshold)


def diag_hausdorff(seq: MeasureSequence, threshold: float = THRESHOLD) -> Trend:
    lim = seq.limit.support
    return _trend([hausdorff_distance(mu.support, lim, seq.space) for mu in seq.terms], threshold)


def default_radii(seq: MeasureSequence, levels: int = 8) -> list[float]:
    diam = seq.space.diameter(seq.limit.support)
    if diam == 0:
        return [1.0]
    return [diam * 2.0**-k for k in range(1, levels + 1)]


@dataclass
class BallMassTable:
    radii: list[float]
    infima: list[float]
    threshold: float

    @property
    def positive(self) -> bool:
        return all(v > self.threshold for v in self.infima)

    def to_json(self) -> dict:
        return {"radii": self.radii, "infima": self.infima, "threshold": self.threshold, "positive": self.positive}


def diag_uniform_ball_mass(seq: MeasureSequence, radii=None, threshold: float = THRESHOLD) -> BallMassTable:
    """Infimum over terms of each term's open-ball mass profile at every radius of the grid."""
    radii = [float(r) for r in (default_radii(seq) if radii is None else radii)]
    profiles = [ball_mass(mu) for mu in seq.terms]
    infima = [min(float(m(r)) for m in profiles) for r in radii]
    return BallMassTable(radii, infima, threshold)


@dataclass
class SplitScenario:
    """mu_i = first[i] + (mu_i - first[i]); the limit splits as limit_first + rest."""

    seq: MeasureSequence
    first: list[np.ndarray]
    limit_first: np.ndarray
    label: str = ""
    separation: float = field(init=False)

    def __post_init__(self):
        if len(self.first) != len(self.seq.terms):
            raise ValueError("one split per term required")
        pieces = [*zip(self.first, self.seq.terms), (self.limit_first, self.seq.limit)]
        for w, mu in pieces:
            w = np.asarray(w, dtype=float)
            if w.min() < -TOL or np.any(w > mu.weights + TOL):
                raise ValueError("split pieces must lie between 0 and the measure")
        space = self.seq.space
        sep = math.inf
        for w, mu in zip(self.first, self.seq.terms):
            a = np.flatnonzero(np.asarray(w) > TOL)
            b = np.flatnonzero(mu.weights - np.asarray(w) > TOL)
            if a.size and b.size:
                sep = min(sep, space.point_set_distance(a, b))
        self.separation = sep


def auto_splits(seq: MeasureSequence, scale: float, tol: float = TOL) -> list[SplitScenario]:
    """One scenario per scale-connected piece of supp(limit), each term's atoms going to the nearest piece."""
    comps = delta_components(seq.limit.support, seq.space, scale, tol)
    if len(comps) < 2:
        return []
    d = seq.space.dist
    out = []
    nearest = []
    for mu in seq.terms:
        s = mu.support
        dist_to = np.stack([d[np.ix_(s, c)].min(axis=1) for c in comps])
        nearest.append((s, np.argmin(dist_to, axis=0)))
    for k, comp in enumerate(comps):
        firsts = []
        for mu, (s, lab) in zip(seq.terms, nearest):
            w = np.zeros(seq.space.n)
            w[s[lab == k]] = mu.weights[s[lab == k]]
            firsts.append(w)
        lim = np.zeros(seq.space.n)
        lim[comp] = seq.limit.weights[comp]
        out.append(SplitScenario(seq, firsts, lim, label=f"component {k} (first point {comp[0]})"))
    return out


@dataclass
class SplitVerdict:
    label: str
    separation: float
    masses: list[float]
    limit_mass: float
    hypothesis: bool
    i0: int | None
    holds: bool
    note: str = ""

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "separation": self.separation,
            "masses": self.masses,
            "limit_mass": self.limit_mass,
            "hypothesis": self.hypothesis,
            "i0": self.i0,
            "holds": self.holds,
            "note": self.note,
        }


def _piece_wp(w: np.ndarray, lim: np.ndarray, space: MetricSpace, p: float, tol: float) -> float:
    """W_p between the normalized pieces (0 when both are empty, inf when exactly one is)."""
    a, b = w.sum(), lim.sum()
    if a <= tol and b <= tol:
        return 0.0
    if a <= tol or b <= tol:
        return math.inf
    return solve_wp(DiscreteMeasure(space, w / a), DiscreteMeasure(space, lim / b), p, tol).value


def diag_split(
    scenario: SplitScenario, p: float, threshold: float = THRESHOLD, tol: float = TOL
) -> SplitVerdict:
    """Does each piece's mass settle exactly on the limit piece's mass from some index on?

    The hypothesis (pieces converge in W_p and stay separated) is judged by
    the tail rule on piece masses and on W_p of the normalized pieces; when
    it fails the condition holds vacuously.  Stabilization must start no
    later than the tail window, otherwise it is "not stabilized within horizon".
    """
    if not scenario.separation > 0:
        raise ValueError("split pieces are not separated")
    seq = scenario.seq
    space = seq.space
    masses = [float(np.sum(w)) for w in scenario.first]
    lim_mass = float(np.sum(scenario.limit_first))
    rest_lim = seq.limit.weights - scenario.limit_first
    gaps = [abs(m - lim_mass) for m in masses]
    w1 = [_piece_wp(np.asarray(w, float), scenario.limit_first, space, p, tol) for w in scenario.first]
    w2 = [
        _piece_wp(mu.weights - np.asarray(w, float), rest_lim, space, p, tol)
        for w, mu in zip(scenario.first, seq.terms)
    ]
    hypothesis = all(_trend(v, threshold).converging for v in (gaps, w1, w2))
    i0 = None
    for i in range(len(masses), 0, -1):
        if gaps[i - 1] <= tol:
            i0 = i
        else:
            break
    stable = i0 is not None and i0 <= tail_start(len(masses))
    note = "" if stable else "not stabilized within horizon"
    if not hypothesis:
        note = "hypothesis not met; condition holds vacuously"
    return SplitVerdict(
        scenario.label, scenario.separation, masses, lim_mass, hypothesis, i0 if stable else None,
        (not hypothesis) or stable, note,
    )


@dataclass
class ConvergenceReport:
    name: str
    p: float
    wp: Trend
    hausdorff: Trend
    ball_mass: BallMassTable
    splits: list[SplitVerdict]
    winf: Trend
    split_source: str

    @property
    def prediction(self) -> bool:
        return self.wp.converging and self.hausdorff.converging and all(s.holds for s in self.splits)

    @property
    def observed(self) -> bool:
        return self.winf.converging

    @property
    def match(self) -> bool:
        return self.prediction == self.observed

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "p": self.p,
            "condition_1_wp": self.wp.to_json(),
            "condition_2_hausdorff": self.hausdorff.to_json(),
            "condition_2prime_ball_mass": self.ball_mass.to_json(),
            "condition_3_splits": [s.to_json() for s in self.splits],
            "split_source": self.split_source,
            "winf": self.winf.to_json(),
            "prediction": self.prediction,
            "observed": self.observed,
            "match": self.match,
            # only the supplied or automatic splits are checked, not every admissible one
            "split_coverage": "checked splits only",
        }


def winf_verdict(
    seq: MeasureSequence,
    p: float,
    splits: list[SplitScenario] | None = None,
    scale: float | None = None,
    radii=None,
    threshold: float = THRESHOLD,
    tol: float = TOL,
) -> ConvergenceReport:
    if splits is not None:
        source = "supplied"
    else:
        scale = seq.scale if scale is None else scale
        if scale is None:
            splits, source = [], "none"
        else:
            splits, source = auto_splits(seq, scale, tol), f"automatic at scale {scale:g}"
    winf = _trend([solve_winf(mu, seq.limit, tol).value for mu in seq.terms], threshold)
    return ConvergenceReport(
        seq.name,
        p,
        diag_wp(seq, p, threshold, tol),
        diag_hausdorff(seq, threshold),
        diag_uniform_ball_mass(seq, radii, threshold),
        [diag_split(s, p, threshold, tol) for s in splits],
        winf,
        source,
    )


# -- generated families ----------------------------------------------------------------


def _line(coords) -> MetricSpace:
    return MetricSpace.from_points(np.asarray(coords, dtype=float)[:, None])


def _two_clusters():
    coords = [0.0, 0.1, 0.2, 0.3, 0.4, 3.0, 3.1, 3.2, 3.3, 3.4]
    return _line(coords), np.arange(5), np.arange(5, 10)


def _cluster_measure(space, a, b, mass_a: float) -> DiscreteMeasure:
    w = np.zeros(space.n)
    w[a] = mass_a / a.size
    w[b] = (1 - mass_a) / b.size
    return DiscreteMeasure(space, w)


def family_constant(n_terms: int = 20) -> MeasureSequence:
    X, a, b = _two_clusters()
    mu = _cluster_measure(X, a, b, 0.5)
    return MeasureSequence(X, [mu] * n_terms, mu, "constant", 0.15)


def family_stabilizing_clusters(n_terms: int = 20, i0: int = 5) -> MeasureSequence:
    X, a, b = _two_clusters()
    terms = [_cluster_measure(X, a, b, 0.7 if i < i0 else 0.5) for i in range(1, n_terms + 1)]
    return MeasureSequence(X, terms, _cluster_measure(X, a, b, 0.5), "stabilizing clusters", 0.15)


def family_drifting_mass(n_terms: int = 20) -> MeasureSequence:
    """Cluster masses 1/2 + 2**-i and 1/2 - 2**-i: W_p -> 0 but the split never settles."""
    X, a, b = _two_clusters()
    terms = [_cluster_measure(X, a, b, 0.5 + 2.0**-i) for i in range(1, n_terms + 1)]
    return MeasureSequence(X, terms, _cluster_measure(X, a, b, 0.5), "drifting mass", 0.15)


def family_vanishing_far_atom(n_terms: int = 20) -> MeasureSequence:
    X = _line([*np.linspace(0, 1, 11), 10.0])
    base = np.zeros(12)
    base[:11] = 1 / 11
    far = np.zeros(12)
    far[11] = 1.0
    terms = [DiscreteMeasure(X, (1 - 2.0**-i) * base + 2.0**-i * far) for i in range(1, n_terms + 1)]
    return MeasureSequence(X, terms, DiscreteMeasure(X, base), "vanishing far atom", 0.15)


def family_shrinking_perturbation(n_terms: int = 20) -> MeasureSequence:
    grid = np.linspace(0, 1, 11)
    signs = np.where(np.arange(11) % 2 == 0, 1.0, -1.0)
    coords = [grid] + [grid + 0.03 * 2.0**-i * signs for i in range(1, n_terms + 1)]
    X = _line(np.concatenate(coords))
    terms = []
    for i in range(1, n_terms + 1):
        w = np.zeros(X.n)
        w[11 * i : 11 * (i + 1)] = 1 / 11
        terms.append(DiscreteMeasure(X, w))
    lim = np.zeros(X.n)
    lim[:11] = 1 / 11
    return MeasureSequence(X, terms, DiscreteMeasure(X, lim), "shrinking perturbation", 0.15)


def example_noncompact(i_max: int, n_blocks: int) -> MeasureSequence:
    """Truncated, integer-grid rendition of the heavy-tail counterexample on the line.

    Block n holds the 2n integers in ((n-1)n, n(n+1)] and their mirrors, each
    with weight c*e**-n.  In term i every block n > i is halved and the
    removed mass c*n*e**-n is put on the single points +-n**2.
    """
    if n_blocks < 3:
        raise ValueError("n_blocks must be at least 3")
    blocks = []
    for n in range(1, n_blocks + 1):
        pos = np.arange((n - 1) * n + 1, n * (n + 1) + 1)
        blocks.append((n, pos))
    coords = np.concatenate([np.concatenate([-pos[::-1], pos]) for _, pos in blocks])
    order = np.argsort(coords)
    coords = coords[order]
    X = _line(coords)
    index = {int(x): k for k, x in enumerate(coords)}
    c = 1.0 / sum(4 * n * math.exp(-n) for n in range(1, n_blocks + 1))

    def term(i: int) -> DiscreteMeasure:
        w = np.zeros(X.n)
        for n, pos in blocks:
            for x in pos:
                for sx in (int(x), -int(x)):
                    w[index[sx]] = c * math.exp(-n) * (1.0 if n <= i else 0.5)
            if n > i:
                for sx in (n * n, -n * n):
                    w[index[sx]] += c * n * math.exp(-n)
        return DiscreteMeasure(X, w / w.sum())

    return MeasureSequence(
        X, [term(i) for i in range(1, i_max + 1)], term(n_blocks), f"noncompact truncation ({n_blocks} blocks)", 2.0
    )


FAMILIES = {
    "constant": family_constant,
    "stabilizing-clusters": family_stabilizing_clusters,
    "drifting-mass": family_drifting_mass,
    "vanishing-far-atom": family_vanishing_far_atom,
    "shrinking-perturbation": family_shrinking_perturbation,
    "noncompact": lambda n_terms=8: example_noncompact(n_terms, 8),
}
