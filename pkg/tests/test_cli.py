import subprocess
import sys

import pytest

from distopt.cli import main
from distopt.scenario import builtin_benchmark, parse_scenario, serialize_scenario

from test_scenario import THREE_DT, TWO_AGENTS


@pytest.fixture
def scenario_file(tmp_path):
    p = tmp_path / "two.yaml"
    p.write_text(TWO_AGENTS)
    return p


def test_validate_ok(scenario_file, capsys):
    assert main(["validate", str(scenario_file)]) == 0
    assert capsys.readouterr().out.startswith("OK two-agents: 2 agents")


def test_validate_reports_each_issue(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(THREE_DT.replace("[0.0, 0.25, 0.75]", "[0.0, 0.25, 0.65]"))
    assert main(["validate", str(p)]) == 1
    out = capsys.readouterr().out
    assert "FAIL Assumption 6" in out and "column 3 sums to 0.9" in out


def test_parse_error_exit_code(tmp_path, capsys):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    assert main(["validate", str(p)]) == 2
    assert "line 1, column 1" in capsys.readouterr().err


def test_run_refuses_invalid(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(TWO_AGENTS.replace("feasible_point: [0.0, 0.0]", "feasible_point: [0.0, 2.0]"))
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "Assumption 2" in capsys.readouterr().err


def test_run_with_overrides(scenario_file, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", str(scenario_file), "--out", str(out), "--seed", "1", "--stride", "50", "--horizon", "10",
                 "--no-figures"]) == 0
    text = capsys.readouterr().out
    assert "steps: 100" in text and "samples: 3" in text
    assert not (out / "metrics.png").exists()
    assert len((out / "trajectory.csv").read_text().splitlines()) == 1 + 2 * 3


def test_builtin_writes_scenario_file(tmp_path, capsys):
    out = tmp_path / "b"
    assert main(["builtin", "sec5", "--variant", "dt-projected", "--out", str(out), "--horizon", "20",
                 "--stride", "50", "--no-figures"]) == 0
    assert "feasibility_violations: 0" in capsys.readouterr().out
    assert parse_scenario((out / "scenario.yaml").read_text()) == builtin_benchmark("dt-projected", horizon=20).with_overrides(stride=50)
    # the written file runs through the generic path too
    assert main(["run", str(out / "scenario.yaml"), "--out", str(tmp_path / "r"), "--no-figures"]) == 0


def test_oracle_command(tmp_path, capsys):
    p = tmp_path / "bench.yaml"
    p.write_text(serialize_scenario(builtin_benchmark("ct")))
    assert main(["oracle", str(p)]) == 0
    out = capsys.readouterr().out
    x, y = (float(v) for v in out.split("[")[1].split("]")[0].split(","))
    assert abs(x + 0.5) < 1e-4 and abs(y - 1.0) < 1e-4


def test_console_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "distopt.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("run", "builtin", "validate", "oracle"):
        assert cmd in res.stdout
