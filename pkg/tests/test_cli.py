import json

import numpy as np
import pytest

from qergodic import load_problem, save_problem
from qergodic.cli import main
from _chains import n3_walk, two_copies_tied


@pytest.fixture()
def walk_file(tmp_path):
    path = tmp_path / "walk.json"
    save_problem(n3_walk(0.5, start="3"), path)
    return path


@pytest.fixture()
def f_file(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"3": 1.0}))
    return path


def test_randomwalk_generates_loadable_problem(tmp_path):
    out = tmp_path / "gen.json"
    code = main(
        ["randomwalk", "--p", "0.5", "--N", "3", "--moving", "--start", "3",
         "--out", str(out)]
    )
    assert code == 0
    problem = load_problem(out)
    assert problem.gamma == 2
    assert problem.initial.weights == {"3": 1.0}


def test_validate_ok_and_report(walk_file, tmp_path, capsys):
    code = main(["validate", "--in", str(walk_file)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["valid"] is True
    assert report["meta"]["command"] == "validate"
    assert "input_sha256" in report["meta"]


def test_validate_rejects_bad_kernel(tmp_path, capsys):
    data = {
        "states": ["a", "b"],
        "kernel": [[0.5, 0.4], [0.5, 0.5]],
        "gamma": 1,
        "killing_sets": [["b"]],
        "initial": {"a": 1.0},
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    code = main(["validate", "--in", str(path)])
    assert code == 1
    report = json.loads(capsys.readouterr().out)
    assert any("not stochastic" in v for v in report["violations"])


def test_malformed_json_exits_one(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{oops")
    code = main(["analyze", "--in", str(path)])
    assert code == 1
    assert "line" in capsys.readouterr().err


def test_unknown_flag_exits_one(walk_file, capsys):
    code = main(["qed", "--in", str(walk_file), "--bogus", "1"])
    assert code == 1


def test_analyze_report_structure(walk_file, tmp_path):
    out = tmp_path / "report.json"
    code = main(["analyze", "--in", str(walk_file), "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["lifted_states"] == 14
    assert report["lifted_survivors"] == 8
    assert len(report["classes"]) == 2
    for cls in report["classes"]:
        assert {"states", "period", "cyclic_classes", "rho", "nu", "xi", "residuals"} <= set(cls)


def test_qed_report(walk_file, f_file, tmp_path, capsys):
    code = main(["qed", "--in", str(walk_file), "--f", str(f_file)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["phi_of_f"] == pytest.approx(1 / 3, abs=1e-10)
    assert report["eta"]["3"] == pytest.approx(1 / 3, abs=1e-10)
    assert report["rho_max"] == pytest.approx(
        np.cos(np.pi / 6), abs=1e-12
    )


def test_qed_hypothesis_violation_exits_two(tmp_path, capsys):
    path = tmp_path / "tied.json"
    save_problem(two_copies_tied(), path)
    out = tmp_path / "report.json"
    code = main(["qed", "--in", str(path), "--out", str(out)])
    assert code == 2
    assert "diagnostic" in capsys.readouterr().err
    report = json.loads(out.read_text())
    assert report["error"] == "Hypothesis1Error"


def test_qld_cycle_report(walk_file, capsys):
    code = main(["qld-cycle", "--in", str(walk_file)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["period"] == 2
    assert report["qld_exists"] is False
    assert "no quasi-limiting" in report["verdict"]
    assert report["max_pairwise_tv"] == pytest.approx(1.0)


def test_qprocess_report_and_phase_flag(walk_file, capsys):
    code = main(["qprocess", "--in", str(walk_file)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["gamma"] == 2
    assert len(report["slices"]) == 2
    for sl in report["slices"]:
        for row in sl["matrix"]:
            assert sum(row) == pytest.approx(1.0, abs=1e-10)
    code = main(["qprocess", "--in", str(walk_file), "--phase", "1"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["slices"]) == 1
    assert report["slices"][0]["phase"] == 1


def test_oracle_emits_value_and_csvs(walk_file, f_file, tmp_path):
    out = tmp_path / "oracle.json"
    code = main(
        ["oracle", "--in", str(walk_file), "--f", str(f_file), "--n", "400",
         "--out", str(out)]
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert report["n"] == 400
    assert report["mean_ratio"] == pytest.approx(1 / 3, abs=5e-3)
    ratio_lines = (tmp_path / "oracle_mean_ratio.csv").read_text().splitlines()
    assert len(ratio_lines) == 401
    assert (tmp_path / "oracle_conditional_laws.csv").exists()


def test_oracle_requires_f(walk_file, capsys):
    code = main(["oracle", "--in", str(walk_file), "--n", "10"])
    assert code == 1


def test_simulate_report(walk_file, f_file, tmp_path):
    out = tmp_path / "sim.json"
    code = main(
        ["simulate", "--in", str(walk_file), "--f", str(f_file),
         "--seed", "7", "--paths", "30000", "--horizon", "20",
         "--shards", "3", "--out", str(out)]
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert report["meta"]["seed"] == 7
    assert report["survivors"] > 0
    assert report["mean_ratio_se"] > 0
    csv_lines = (tmp_path / "sim_estimates.csv").read_text().splitlines()
    assert len(csv_lines) == 22  # header + horizons 0..20


def test_oracle_and_qed_agree(walk_file, f_file, tmp_path, capsys):
    out_oracle = tmp_path / "o.json"
    main(["oracle", "--in", str(walk_file), "--f", str(f_file), "--n", "2000",
          "--out", str(out_oracle)])
    oracle = json.loads(out_oracle.read_text())
    main(["qed", "--in", str(walk_file), "--f", str(f_file)])
    qed = json.loads(capsys.readouterr().out)
    assert abs(oracle["mean_ratio"] - qed["phi_of_f"]) <= 1e-2
