import json

import numpy as np
import pytest

from feaslab.cli import main


def run_cli(args):
    return main([str(a) for a in args])


def write_cfg(path, cfg):
    with open(path, "w") as fh:
        json.dump(cfg, fh)


def solve_cfg(**overrides):
    cfg = {
        "schemaVersion": 1,
        "family": {
            "schemaVersion": 1,
            "sets": [
                {"schemaVersion": 1, "kind": "halfspace", "normal": [1, 0], "offset": 0.0},
                {"schemaVersion": 1, "kind": "halfspace", "normal": [0, 1], "offset": 0.0},
            ],
        },
        "strategy": "cyclic",
        "schedule": {"kind": "constant", "t": 1.0},
        "x0": [1.0, 1.0],
        "maxIters": 100,
        "stopResidual": 1e-10,
        "witnesses": [[-0.5, -0.5]],
    }
    cfg.update(overrides)
    return cfg


def test_solve_two_halfspaces(tmp_path, capsys):
    cfg_path = tmp_path / "run.json"
    write_cfg(cfg_path, solve_cfg())
    code = run_cli(["solve", "--input", cfg_path, "--out", tmp_path / "out"])
    assert code == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["converged"] is True
    assert summary["iterations"] == 2
    assert (tmp_path / "out" / "trace.csv").exists()


def test_solve_exit_2_on_iteration_cap(tmp_path):
    cfg_path = tmp_path / "run.json"
    write_cfg(cfg_path, solve_cfg(maxIters=1, x0=[10.0, 10.0], stopResidual=1e-14,
                                  schedule={"kind": "constant", "t": 0.5}))
    code = run_cli(["solve", "--input", cfg_path, "--out", tmp_path / "out"])
    assert code == 2


def test_solve_missing_kind_field(tmp_path, capsys):
    cfg = solve_cfg()
    del cfg["family"]["sets"][0]["kind"]
    cfg_path = tmp_path / "bad.json"
    write_cfg(cfg_path, cfg)
    code = run_cli(["solve", "--input", cfg_path, "--out", tmp_path / "out"])
    assert code == 1
    assert '"kind"' in capsys.readouterr().err


def test_solve_malformed_json(tmp_path, capsys):
    cfg_path = tmp_path / "broken.json"
    cfg_path.write_text('{"schemaVersion": 1,,}')
    code = run_cli(["solve", "--input", cfg_path, "--out", tmp_path / "out"])
    assert code == 1
    err = capsys.readouterr().err
    assert "line" in err and "column" in err


def test_solve_unknown_field_rejected(tmp_path, capsys):
    cfg_path = tmp_path / "run.json"
    write_cfg(cfg_path, solve_cfg(typo_field=3))
    code = run_cli(["solve", "--input", cfg_path, "--out", tmp_path / "out"])
    assert code == 1
    assert "typo_field" in capsys.readouterr().err


def test_scenario_case2_golden(tmp_path):
    out = tmp_path / "c2"
    code = run_cli(
        ["scenario", "case2", "--half-angle", "30deg", "--delta", "0.5", "--out", out]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "gprFails"
    assert report["intersectionDistanceTail"] == pytest.approx(0.5, abs=1e-6)


def test_scenario_case3_golden(tmp_path):
    out = tmp_path / "c3"
    code = run_cli(["scenario", "case3", "--p", "1", "--d", "1", "--out", out])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "gprFails"
    # the intersection-distance column is pinned at d = 1
    rows = (out / "gpr_table.csv").read_text().splitlines()[1:]
    for row in rows:
        assert float(row.split(",")[-1]) == pytest.approx(1.0, abs=1e-6)


def test_scenario_case4_certificate(tmp_path):
    out = tmp_path / "c4"
    code = run_cli(["scenario", "case4", "--eps", "0.1", "--out", out])
    assert code == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["tailIndex"] >= 0
    assert cert["baseDistanceBound"] <= 0.1


def test_scenario_case1_golden(tmp_path):
    out = tmp_path / "c1"
    assert run_cli(["scenario", "case1", "--out", out]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "gprHolds"


def test_scenario_csv_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli(["scenario", "case2", "--seed", 7, "--out", out]) == 0
    assert (a / "gpr_table.csv").read_bytes() == (b / "gpr_table.csv").read_bytes()


def test_scenario_verdict_mismatch_exit_3(tmp_path):
    # an absurdly small threshold makes case1 inconclusive, which does
    # not match the expected verdict for that case
    code = run_cli(
        ["scenario", "case1", "--threshold", "1e-9", "--out", tmp_path / "m"]
    )
    assert code == 3


def test_scenario_parameter_validation(tmp_path, capsys):
    code = run_cli(
        ["scenario", "case2", "--delta", "0.5", "--r-base", "0.5", "--out", tmp_path]
    )
    assert code == 1


def test_check_identity_suite(tmp_path, capsys):
    code = run_cli(["check", "identity", "--out", tmp_path, "--seed", 3])
    assert code == 0
    report = json.loads((tmp_path / "check_report.json").read_text())
    assert report["passed"] is True
    assert report["suites"][0]["suite"] == "identity"
    assert report["suites"][0]["failures"] == 0


def test_check_unknown_suite(tmp_path, capsys):
    code = run_cli(["check", "nosuch", "--out", tmp_path])
    assert code == 1
    assert "valid suites" in capsys.readouterr().err


def test_angle_suffix_parsing(tmp_path):
    out = tmp_path / "deg"
    assert run_cli(["scenario", "case2", "--half-angle", "0.5235987755982988rad",
                    "--out", out]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "gprFails"
