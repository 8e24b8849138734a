import numpy as np
import pytest

from oracles import lp_transport_cost
from winfty.costs import CostFunction
from winfty.instances import line_space
from winfty.monotonicity import build_collapse_plan, check_cyclical_monotonicity
from winfty.solvers import solve_cost
from winfty.space import DiscreteMeasure, MetricSpace, TransportPlan, plan_cost

H2 = CostFunction.power(2)


def test_identity_plan_is_monotone():
    mu = DiscreteMeasure.uniform(line_space(6))
    assert check_cyclical_monotonicity(TransportPlan.identity(mu), H2) is None


def test_crossing_plan_gain():
    mu = DiscreteMeasure.from_atoms(line_space(4), {0: 0.5, 3: 0.5})
    plan = TransportPlan.from_entries(mu, mu, [(0, 3, 0.5), (3, 0, 0.5)])
    v = check_cyclical_monotonicity(plan, H2)
    assert v is not None and v.gain == 18.0
    assert sorted(v.points) == [(0, 3), (3, 0)]


def test_k_must_be_at_least_two():
    mu = DiscreteMeasure.uniform(line_space(2))
    with pytest.raises(ValueError):
        check_cyclical_monotonicity(TransportPlan.identity(mu), H2, K=1)


def test_solver_plans_are_monotone():
    rng = np.random.default_rng(0)
    for _ in range(20):
        X = MetricSpace.from_points(rng.random((5, 2)))
        mu = DiscreteMeasure(X, rng.dirichlet(np.ones(5)))
        nu = DiscreteMeasure(X, rng.dirichlet(np.ones(5)))
        plan = solve_cost(mu, nu, H2).plan
        assert check_cyclical_monotonicity(plan, H2, K=4) is None


def test_violating_plans_cost_more():
    rng = np.random.default_rng(1)
    found = 0
    for _ in range(30):
        X = MetricSpace.from_points(rng.random((4, 2)))
        M = rng.random((4, 4))
        M /= M.sum()
        mu, nu = DiscreteMeasure(X, M.sum(1)), DiscreteMeasure(X, M.sum(0))
        plan = TransportPlan.from_dense(mu, nu, M)
        if check_cyclical_monotonicity(plan, H2) is not None:
            found += 1
            assert plan_cost(plan, H2) > lp_transport_cost(mu, nu, H2) + 1e-12
    assert found > 0


def test_sampling_mode_finds_planted_crossing():
    X = line_space(20)
    mu = DiscreteMeasure.uniform(X)
    entries = [(i, i, 0.05) for i in range(1, 19)] + [(0, 19, 0.05), (19, 0, 0.05)]
    plan = TransportPlan.from_entries(mu, mu, entries)
    v = check_cyclical_monotonicity(plan, H2, max_entries=5, samples=5000, seed=3)
    assert v is not None and v.gain > 0


def test_collapse_plan_marginals():
    X = line_space(5)
    mu = DiscreteMeasure(X, [0.1, 0.2, 0.3, 0.25, 0.15])
    A, y, t = [0, 2], 4, 0.2
    plan = build_collapse_plan(mu, A, y, t)
    frac = t / 0.4
    expected = mu.weights.copy()
    expected[A] *= 1 - frac
    expected[y] += t
    assert plan.marginal_error() < 1e-12
    assert np.allclose(plan.row_sums(), mu.weights)
    assert np.allclose(plan.col_sums(), expected)


def test_collapse_plan_limits():
    X = line_space(5)
    mu = DiscreteMeasure.uniform(X)
    small = build_collapse_plan(mu, [1], 3, 1e-12)
    assert np.allclose(small.to_dense(), TransportPlan.identity(mu).to_dense(), atol=1e-11)
    half = build_collapse_plan(mu, range(5), 2, 0.5)
    M = half.to_dense()
    assert M[:, 2].sum() == pytest.approx(0.5 + 0.1)
    assert np.allclose(np.delete(M[:, 2], 2), 0.1)
    with pytest.raises(ValueError):
        build_collapse_plan(mu, [1], 3, 0.3)
