import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from oracles import lp_transport_cost
from winfty.bounds import chain_condition, omega_main, verify_main_bound
from winfty.costs import CostFunction
from winfty.monotonicity import build_collapse_plan, check_cyclical_monotonicity
from winfty.solvers import oracle_winf, solve_cost, solve_winf
from winfty.space import DiscreteMeasure, MetricSpace, ball_mass, connectivity_scale, plan_sup_distance
from winfty.surgery import SurgeryParams, surgery_transport, winf_upper_bound_via_surgery

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def instances(draw, max_n=8, max_support=None):
    n = draw(st.integers(2, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    X = MetricSpace.from_points(rng.random((n, 2)))
    k = max_support or n

    def measure():
        idx = rng.choice(n, int(rng.integers(1, min(k, n) + 1)), replace=False)
        w = np.zeros(n)
        w[idx] = rng.dirichlet(np.ones(idx.size))
        return DiscreteMeasure(X, w)

    return X, measure(), measure()


powers = st.sampled_from([1.0, 1.5, 2.0, 3.0])


@SETTINGS
@given(instances(), powers)
def test_cost_equals_lp(inst, p):
    X, mu, nu = inst
    h = CostFunction.power(p)
    res = solve_cost(mu, nu, h)
    assert abs(res.value - lp_transport_cost(mu, nu, h)) < 1e-9
    assert res.plan.marginal_error() < 1e-9


@SETTINGS
@given(instances(max_support=6))
def test_winf_equals_hall_oracle(inst):
    X, mu, nu = inst
    assert solve_winf(mu, nu).value == oracle_winf(mu, nu)


@SETTINGS
@given(instances(max_n=6, max_support=4), powers)
def test_optimal_plans_monotone(inst, p):
    X, mu, nu = inst
    h = CostFunction.power(p)
    assert check_cyclical_monotonicity(solve_cost(mu, nu, h).plan, h) is None


@SETTINGS
@given(instances(max_n=12), powers)
def test_winf_bounds_cost_from_both_sides(inst, p):
    # W_p <= W_inf, and the optimal plan's sup displacement is at least W_inf
    X, mu, nu = inst
    h = CostFunction.power(p)
    res = solve_cost(mu, nu, h)
    w = solve_winf(mu, nu).value
    assert res.value ** (1 / p) <= w + 1e-9
    assert plan_sup_distance(res.plan) >= w - 1e-12


@SETTINGS
@given(instances(max_n=12), powers)
def test_main_bound_holds(inst, p):
    X, mu, _ = inst
    supp = mu.support
    rng = np.random.default_rng(supp.size)
    w = np.zeros(X.n)
    w[supp] = rng.dirichlet(np.ones(supp.size))
    nu = DiscreteMeasure(X, w)
    delta = connectivity_scale(supp, X)
    assert verify_main_bound(mu, nu, CostFunction.power(p), delta).passed


@SETTINGS
@given(instances(max_n=14))
def test_surgery_bound(inst):
    X, mu, nu = inst
    supp = mu.support
    delta = connectivity_scale(supp, X)
    eps = X.dist[np.ix_(nu.support, supp)].min(axis=1).max()
    lam = solve_cost(mu, nu, CostFunction.power(1)).plan
    bound, r = winf_upper_bound_via_surgery(mu, nu, lam, delta, eps)
    assume(r is not None)
    out = surgery_transport(lam, SurgeryParams(r, eps, delta))
    assert out.eta.marginal_error() < 1e-9
    assert plan_sup_distance(out.eta) <= 17 * r + 4 * eps + delta


@SETTINGS
@given(instances(max_n=10), st.floats(0.01, 0.99))
def test_collapse_plan_is_coupling(inst, frac):
    X, mu, _ = inst
    supp = mu.support.tolist()
    A = supp[: max(1, len(supp) // 2)]
    plan = build_collapse_plan(mu, A, supp[-1], frac * mu.mass(A))
    assert plan.marginal_error() < 1e-12


@SETTINGS
@given(instances(max_n=10), st.lists(st.floats(0, 20), min_size=2, max_size=20))
def test_omega_main_nondecreasing(inst, ts):
    X, mu, _ = inst
    m = ball_mass(mu)
    h = CostFunction.power(2)
    ts = sorted(ts)
    vals = [omega_main(m, h, t) for t in ts]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@SETTINGS
@given(instances(max_n=7), st.floats(0.25, 4.0), powers)
def test_chain_verdict_rescaling(inst, c, p):
    X, mu, _ = inst
    h = CostFunction.power(p)
    base = chain_condition(mu, h)
    assume(all(abs(r["slack"]) > 1e-6 for r in base.rows))
    scaled_mu = DiscreteMeasure(MetricSpace(X.dist * c), mu.weights)
    # h(t / c) on the scaled metric is a positive multiple of t**p there
    scaled = chain_condition(scaled_mu, CostFunction.shifted_power(c**-p, p, 0.0), tol=1e-9 * c**-p)
    assert [r["holds"] for r in scaled.rows] == [r["holds"] for r in base.rows]
