import json

import numpy as np
import pytest

from winfty.cli import main


@pytest.fixture
def inst(tmp_path):
    assert main(["generate", "--kind", "snowflake", "--param", "n=21", "--param", "s=1.5", "--out", str(tmp_path)]) == 0
    w = np.zeros(21)
    w[[3, 17]] = 0.5
    (tmp_path / "nu.json").write_text(json.dumps({"weights": w.tolist(), "total": 1.0}))
    return tmp_path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def files(d, nu=True):
    out = ["--metric", d / "metric.json", "--mu", d / "mu.json"]
    return out + (["--nu", d / "nu.json"] if nu else [])


def test_solve_and_monotone(inst, capsys):
    code, out = run(["solve", *files(inst), "--cost", "p:2"], capsys)
    res = json.loads(out)
    assert code == 0 and res["value"] > 0 and res["diagnostics"]["duality_gap"] < 1e-9
    (inst / "plan.json").write_text(json.dumps(res["plan"]))
    code, out = run(["monotone-check", "--metric", inst / "metric.json", "--plan", inst / "plan.json", "--cost", "p:2"], capsys)
    assert code == 0 and json.loads(out)["monotone"]
    code, out = run(["solve", *files(inst), "--winf"], capsys)
    assert code == 0 and json.loads(out)["value"] > 0


def test_monotone_violation_exit(inst, capsys):
    (inst / "cross.json").write_text(json.dumps({"entries": [[0, 20, 0.5], [20, 0, 0.5]]}))
    code, out = run(["monotone-check", "--metric", inst / "metric.json", "--plan", inst / "cross.json", "--cost", "p:2"], capsys)
    assert code == 1 and json.loads(out)["violation"]["gain"] > 0


def test_chain_check_csv(inst, capsys):
    code, out = run(["chain-check", *files(inst, nu=False), "--cost", "p:2"], capsys)
    lines = out.strip().splitlines()
    assert code == 1 and lines[0] == "x,y,d,h_d,chain_cost,slack,holds,exempt"
    assert len(lines) == 1 + 21 * 20 // 2
    code, _ = run(["chain-check", *files(inst, nu=False), "--cost", "p:2", "--resolution", "0.14"], capsys)
    assert code == 0


def test_rho_and_bounds(inst, capsys):
    code, out = run(["rho", *files(inst, nu=False), "--cost", "p:2", "--resolution", "0.14"], capsys)
    assert code == 0 and json.loads(out)["values"][0] > 0
    code, out = run(["rho", *files(inst, nu=False), "--cost", "p:1.2", "--resolution", "0.14"], capsys)
    assert code == 1 and "violated" in json.loads(out)["error"]
    code, out = run(["verify-bound", "--plan", *files(inst), "--cost", "p:2", "--resolution", "0.14"], capsys)
    assert code == 0 and json.loads(out)["passed"]
    code, out = run(["verify-bound", "--main", *files(inst), "--cost", "p:2", "--delta", "0.14"], capsys)
    assert code == 0 and json.loads(out)["passed"]


def test_surgery_command(inst, capsys):
    code, out = run(["solve", *files(inst), "--cost", "p:1"], capsys)
    (inst / "plan.json").write_text(json.dumps(json.loads(out)["plan"]))
    code, out = run(["surgery", *files(inst), "--plan", inst / "plan.json", "--r", "0.5", "--delta", "0.14"], capsys)
    res = json.loads(out)
    assert code == 0 and res["sup_distance"] <= res["params"]["bound"]
    code, out = run(["surgery", *files(inst), "--plan", inst / "plan.json", "--r", "0.01", "--delta", "0.14"], capsys)
    assert code == 1 and "long-haul" in json.loads(out)["error"]


def test_converge_command(inst, capsys, tmp_path):
    code, out = run(["converge", "--metric", inst / "metric.json", "--seq", inst / "mu.json", inst / "nu.json",
                     inst / "mu.json", "--limit", inst / "mu.json", "--format", "csv", "--out", tmp_path / "series.csv"], capsys)
    assert code == 0
    assert (tmp_path / "series.csv").read_text().startswith("i,wp,hausdorff,winf")
    verdicts = json.loads((tmp_path / "series.verdicts.json").read_text())
    assert verdicts["match"]


def test_usage_and_io_errors(inst, capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code = main(["solve", "--metric", str(bad), "--mu", str(inst / "mu.json"), "--nu", str(inst / "nu.json")])
    assert code == 2
    assert "bad.json" in capsys.readouterr().err
    with pytest.raises(SystemExit) as e:
        main(["solve"])
    assert e.value.code == 2
    code = main(["solve", *map(str, files(inst)), "--cost", "p:0.2"])
    assert code == 2


def test_suite_empty_and_subset(tmp_path, capsys):
    assert main(["suite", "--criteria", "", "--out", str(tmp_path / "empty")]) == 0
    assert not (tmp_path / "empty").exists()
    assert main(["suite", "--criteria", "4,5", "--out", str(tmp_path / "b"), "--format", "csv"]) == 0
    names = sorted(p.name for p in (tmp_path / "b").iterdir())
    assert names == ["criterion_4.json", "criterion_5.json", "summary.csv", "summary.json"]
    assert "criterion 4: PASS" in capsys.readouterr().out
