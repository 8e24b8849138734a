"""One test per acceptance criterion; each prints a PASS/FAIL line, repeated in the run summary."""
import json
import time

import pytest

from conftest import ACCEPTANCE_LINES
from winfty import io
from winfty.suite import ALL_CRITERIA, CRITERIA, RunConfig, run_suite

CFG = RunConfig(seed=0)
BUDGET = {1: 10.0, 2: 30.0}


def report(k, passed, detail=""):
    line = f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
    ACCEPTANCE_LINES[k] = line
    print(line)


def run(k):
    t0 = time.perf_counter()
    rec = CRITERIA[k](CFG)
    elapsed = time.perf_counter() - t0
    ok = rec["passed"] and elapsed < BUDGET.get(k, float("inf"))
    report(k, ok, f"{rec['title']} ({elapsed:.2f} s, {rec['n_failures']} failures)")
    return rec, elapsed


def test_criterion_1_surgery():
    rec, elapsed = run(1)
    assert rec["passed"], rec["failures"]
    assert rec["instances"] == 200 and rec["eps_split"]["0"] and rec["eps_split"]["small"]
    assert elapsed < 10.0


def test_criterion_2_main_bound():
    rec, elapsed = run(2)
    assert rec["passed"], rec["failures"]
    assert rec["nonvacuous"] > 0
    assert elapsed < 30.0


def test_criterion_3_sharpness():
    rec, _ = run(3)
    assert rec["passed"], rec["failures"]


def test_criterion_4_oracles():
    rec, _ = run(4)
    assert rec["passed"], rec["failures"]
    assert rec["winf_instances"] == 500 and rec["cost_instances"] == 200


def test_criterion_5_monotone():
    rec, _ = run(5)
    assert rec["passed"], rec["failures"]
    assert rec["crossing_gain"] == pytest.approx(18.0, abs=1e-12)
    assert rec["max_plan_entries"] <= 15


def test_criterion_6_phase_transition():
    rec, _ = run(6)
    assert rec["passed"], rec["failures"]
    assert rec["p2_failing_pairs"] == 0 and rec["p12_failing_pairs"] > 0


def test_criterion_7_plan_bound():
    rec, _ = run(7)
    assert rec["passed"], rec["failures"]
    assert rec["line3"]["error"] < 1e-6
    assert "condition (1) violated" in rec["without_chain_condition"]["rho_error"]


def test_criterion_8_convergence():
    rec, _ = run(8)
    assert rec["passed"], rec["failures"]
    assert len(rec["families"]) == 6


def test_criterion_9_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg_a = RunConfig(seed=0, out=str(tmp_path / "a"))
    cfg_b = RunConfig(seed=0, out=str(tmp_path / "b"))
    code_a, a = run_suite(cfg_a)
    code_b, b = run_suite(cfg_b)
    same_bytes = all(
        (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes() for name in a
    )
    ok = a == b and same_bytes and sorted(a) == sorted(b)
    report(9, ok, f"repeated runs are byte-identical ({time.perf_counter() - t0:.2f} s, {len(a)} files)")
    assert ok
    assert set(a) == {f"criterion_{k}.json" for k in ALL_CRITERIA} | {"summary.json"}
    assert code_a == 0
    assert all(r["passed"] for r in json.loads(a["summary.json"])["results"])
    assert a["summary.json"] == io.dumps(json.loads(a["summary.json"]))
