"""Exact discrete transport solvers and checkers for L-infinity transport estimates."""
from .costs import CostFunction, parse_cost
from .space import (
    TOL,
    BallMassProfile,
    DiscreteMeasure,
    MetricSpace,
    NetPartition,
    TransportPlan,
    ValidationReport,
    ball_mass,
    build_partition,
    connectivity_scale,
    delta_components,
    hausdorff_distance,
    plan_cost,
    plan_sup_distance,
    separated_net,
    validate_space,
)
from .solvers import SolveResult, UnbalancedError, feasible_at, solve_cost, solve_winf, solve_wp

__version__ = "0.1.0"
