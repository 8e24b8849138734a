import json

import numpy as np
import pytest

from winfty import io
from winfty.instances import cantor_points, generate_instance
from winfty.solvers import solve_cost
from winfty.costs import CostFunction
from winfty.space import DiscreteMeasure


def test_line_single_point():
    space, mu = generate_instance("line", n=1)
    assert space.dist.tolist() == [[0.0]] and mu.weights.tolist() == [1.0]


def test_snowflake_s1_is_line():
    a, _ = generate_instance("snowflake", n=9, s=1.0, length=8.0)
    b, _ = generate_instance("line", n=9)
    assert np.allclose(a.dist, b.dist)


def test_cantor_level3():
    pts = cantor_points(3)
    assert pts.size == 8
    gaps = np.diff(pts)
    # left endpoints times 27: 0 2 6 8 18 20 24 26
    assert gaps.min() == pytest.approx(2 * 3.0**-3)
    assert sorted(set(np.round(gaps * 27, 9))) == [2.0, 4.0, 10.0]
    space, mu = generate_instance("cantor", level=3)
    assert mu.weights == pytest.approx([1 / 8] * 8)


def test_clusters_and_grid():
    space, mu = generate_instance("clusters", k=3, size=4, seed=2)
    assert space.n == 12
    space, mu = generate_instance("grid", nx=3, ny=4, weights="random", seed=1)
    assert space.n == 12 and mu.total == pytest.approx(1.0)
    with pytest.raises(ValueError):
        generate_instance("torus")


def test_round_trip(tmp_path):
    space, mu = generate_instance("grid", nx=3, ny=3, weights="random", seed=4)
    nu = DiscreteMeasure(space, np.roll(mu.weights, 2))
    plan = solve_cost(mu, nu, CostFunction.power(2)).plan
    (tmp_path / "m.json").write_text(io.dumps(io.space_to_json(space)))
    (tmp_path / "mu.json").write_text(io.dumps(io.measure_to_json(mu)))
    (tmp_path / "p.json").write_text(io.dumps(io.plan_to_json(plan)))
    space2 = io.load_space(tmp_path / "m.json")
    mu2 = io.load_measure(tmp_path / "mu.json", space2)
    plan2 = io.load_plan(tmp_path / "p.json", space2)
    assert np.array_equal(space2.dist, space.dist)
    assert np.array_equal(mu2.weights, mu.weights)
    assert plan2.entries == plan.entries
    assert io.dumps(io.plan_to_json(plan2)) == io.dumps(io.plan_to_json(plan))


def test_parse_diagnostics(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "dist": [[0, 1], [1')
    with pytest.raises(io.InputError, match="bad.json: invalid JSON at line 1"):
        io.load_space(bad)
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"n": 3, "dist": [[0, 1], [1, 0]]}))
    with pytest.raises(io.InputError, match="n = 3"):
        io.load_space(wrong)
    with pytest.raises(io.InputError, match="cannot read"):
        io.load_space(tmp_path / "missing.json")
    nodist = tmp_path / "nodist.json"
    nodist.write_text("{}")
    with pytest.raises(io.InputError, match="missing field 'dist'"):
        io.load_space(nodist)
