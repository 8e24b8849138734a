import math

import numpy as np
import pytest

from winfty.costs import CostFunction
from winfty.solvers import solve_cost, solve_winf
from winfty.space import (
    DiscreteMeasure,
    MetricSpace,
    TransportPlan,
    ball_mass,
    build_partition,
    connectivity_scale,
    plan_sup_distance,
    separated_net,
)
from winfty.surgery import (
    SurgeryError,
    SurgeryParams,
    build_cell_chain,
    check_assumption,
    long_haul_mass,
    surgery_transport,
    winf_upper_bound_via_surgery,
)


def line(*xs):
    return MetricSpace.from_points(np.array(xs, dtype=float))


def test_params_bound():
    assert SurgeryParams(1.0, 0.5, 0.25).bound == 17 + 2 + 0.25
    with pytest.raises(ValueError):
        SurgeryParams(0.0)


def test_assumption_identity():
    mu = DiscreteMeasure.uniform(line(*range(5)))
    m = ball_mass(mu)
    ok, margin = check_assumption(TransportPlan.identity(mu), m, 1.5)
    assert ok and margin == pytest.approx(m(1.5) / 2)


def test_assumption_dirac_move():
    X = line(0, 2)
    a = DiscreteMeasure.from_atoms(X, {0: 1.0})
    b = DiscreteMeasure.from_atoms(X, {1: 1.0})
    plan = TransportPlan.from_entries(a, b, [(0, 1, 1.0)])
    ok, margin = check_assumption(plan, ball_mass(a), 1.0)
    assert not ok and margin == pytest.approx(-0.5)


def test_assumption_hand_sum():
    rng = np.random.default_rng(2)
    X = line(*range(10))
    M = rng.random((10, 10)) * (rng.random((10, 10)) < 0.3)
    M[np.arange(10), np.arange(10)] += 0.2
    M /= M.sum()
    mu, nu = DiscreteMeasure(X, M.sum(1)), DiscreteMeasure(X, M.sum(0))
    plan = TransportPlan.from_dense(mu, nu, M)
    r = 3.0
    far = sum(M[i, j] for i in range(10) for j in range(10) if abs(i - j) >= r)
    assert long_haul_mass(plan, r) == pytest.approx(far)
    assert check_assumption(plan, ball_mass(mu), r)[1] == pytest.approx(ball_mass(mu)(r) / 2 - far)


def test_cell_chain_line():
    X = line(*range(10))
    mu = DiscreteMeasure.uniform(X)
    part = build_partition(separated_net(range(10), X, 1.0), range(10), range(10))
    assert build_cell_chain(part, 0, 0, 1.0, mu) == [0]
    assert build_cell_chain(part, 0, 1, 1.0, mu) == [0, 1]


def test_cell_chain_disconnected():
    X = line(0, 1, 50, 51)
    mu = DiscreteMeasure.uniform(X)
    part = build_partition(separated_net(range(4), X, 1.0), range(4), range(4))
    with pytest.raises(SurgeryError, match="support not delta-connected across cells"):
        build_cell_chain(part, 0, 1, 1.0, mu)


def test_cell_chain_prefers_fewest_then_smallest():
    # cells along a square: 0 - 1 - 3 and 0 - 2 - 3 both length 2; the walk takes 1
    X = MetricSpace.from_points(np.array([[0, 0], [10, 0], [0, 10], [10, 10]], dtype=float))
    mu = DiscreteMeasure.uniform(X)
    part = build_partition(separated_net(range(4), X, 1.0), range(4), range(4))
    assert build_cell_chain(part, 0, 3, 10.0, mu) == [0, 1, 3]


def test_identity_surgery_is_all_diagonal():
    # no long haul: everything lands in the per-cell product blocks, beta_i = mu(U_i)
    mu = DiscreteMeasure(line(*range(8)), np.arange(1, 9) / 36)
    lam = TransportPlan.identity(mu)
    out = surgery_transport(lam, SurgeryParams(1.0, 0.0, 1.0))
    assert out.part_mass["chain"] == 0 and out.part_mass["short"] == 0
    cells = out.partition.cells()
    assert out.betas == pytest.approx([mu.mass(c) for c in cells])
    M = out.eta.to_dense()
    for c in cells:
        block = np.outer(mu.weights[c], mu.weights[c]) / mu.mass(c)
        assert np.allclose(M[np.ix_(c, c)], block, atol=1e-15)


def test_singleton_cells_keep_identity():
    mu = DiscreteMeasure.uniform(line(0, 10, 20))
    lam = TransportPlan.identity(mu)
    out = surgery_transport(lam, SurgeryParams(1.0, 0.0, 10.0))
    assert np.allclose(out.eta.to_dense(), lam.to_dense(), atol=1e-15)


def test_swap_on_line():
    X = line(*range(10))
    rng = np.random.default_rng(4)
    mu = DiscreteMeasure(X, rng.dirichlet(np.ones(10)))
    nu = DiscreteMeasure(X, rng.dirichlet(np.ones(10)))
    lam = solve_cost(mu, nu, CostFunction.power(1)).plan
    # move a little mass along a distance-6 swap: (1 -> a, 7 -> b) becomes (1 -> b, 7 -> a)
    M = lam.to_dense()
    a = int(np.argmax(M[1]))
    b = int(np.argmax(M[7]))
    w = 0.25 * min(M[1, a], M[7, b])
    M[1, a] -= w
    M[7, b] -= w
    M[1, b] += w
    M[7, a] += w
    pert = TransportPlan.from_dense(mu, nu, M)
    m = ball_mass(mu)
    r = next(float(t) for t in m.breakpoints if t > 0 and check_assumption(pert, m, float(t))[0])
    out = surgery_transport(pert, SurgeryParams(r, 0.0, 1.0))
    assert out.eta.marginal_error() < 1e-9
    assert plan_sup_distance(out.eta) <= 17 * r + 1.0
    lim = {"short": 17 * r, "chain": 16 * r + 1.0, "diagonal": 8 * r}
    for name, entries in out.parts.items():
        assert all(X.dist[x, y] <= lim[name] for x, y, _ in entries)


def test_surgery_refuses_violated_assumption():
    X = line(0, 2)
    a = DiscreteMeasure.from_atoms(X, {0: 1.0})
    b = DiscreteMeasure.from_atoms(X, {1: 1.0})
    plan = TransportPlan.from_entries(a, b, [(0, 1, 1.0)])
    with pytest.raises(SurgeryError, match="long-haul mass too large"):
        surgery_transport(plan, SurgeryParams(1.0, 0.0, 2.0))


def test_surgery_refuses_disconnected():
    mu = DiscreteMeasure.uniform(line(0, 1, 10))
    with pytest.raises(SurgeryError):
        surgery_transport(TransportPlan.identity(mu), SurgeryParams(0.5, 0.0, 1.0))


def test_upper_bound_identity_uses_smallest_breakpoint():
    mu = DiscreteMeasure.uniform(line(0, 1, 3, 6))
    bound, r = winf_upper_bound_via_surgery(mu, mu, TransportPlan.identity(mu), 3.0)
    assert r == 1.0 and bound == 17 + 3.0


def test_upper_bound_unsatisfiable():
    X = line(0, 5)
    a = DiscreteMeasure.from_atoms(X, {0: 1.0})
    b = DiscreteMeasure.from_atoms(X, {1: 1.0})
    plan = TransportPlan.from_entries(a, b, [(0, 1, 1.0)])
    assert winf_upper_bound_via_surgery(a, b, plan, 0.0) == (math.inf, None)


def test_upper_bound_dominates_winf():
    rng = np.random.default_rng(8)
    for _ in range(20):
        X = MetricSpace.from_points(rng.random((12, 2)))
        mu = DiscreteMeasure(X, rng.dirichlet(np.ones(12)))
        nu = DiscreteMeasure(X, rng.dirichlet(np.ones(12)))
        lam = solve_cost(mu, nu, CostFunction.power(2)).plan
        bound, r = winf_upper_bound_via_surgery(mu, nu, lam, connectivity_scale(range(12), X))
        assert bound >= solve_winf(mu, nu).value


def test_surgery_json_parts_ledger():
    rng = np.random.default_rng(9)
    X = MetricSpace.from_points(rng.random((10, 2)))
    mu = DiscreteMeasure(X, rng.dirichlet(np.ones(10)))
    nu = DiscreteMeasure(X, rng.dirichlet(np.ones(10)))
    lam = solve_cost(mu, nu, CostFunction.power(1)).plan
    delta = connectivity_scale(range(10), X)
    _, r = winf_upper_bound_via_surgery(mu, nu, lam, delta)
    out = surgery_transport(lam, SurgeryParams(r, 0.0, delta)).to_json()
    assert set(out["parts"]) == {"short", "chain", "diagonal"}
    total = sum(m for part in out["parts"].values() for *_, m in part)
    assert total == pytest.approx(1.0)
