from __future__ import annotations

import copy

import pandas as pd
import pytest

from sailcone import BACKEND_ENV, main, read_summary
from sailcone._cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK
from sailcone._sim import HISTORY_COLUMNS
from tests.conftest import WAGENINGEN_SAMPLE, baseline_document, write_scenario


def test_plan_writes_solution_and_summary(tmp_path, monkeypatch):
    monkeypatch.setenv(BACKEND_ENV, "ipm")
    code = main(["plan", "baseline.json", "--nodes", "40", "--backend", "clarabel", "--out", str(tmp_path), "--emit-path"])
    assert code == EXIT_OK
    summary = read_summary(tmp_path / "plan_summary.json")
    assert summary["status"] == "optimal"
    assert summary["backend"] == "clarabel"
    assert summary["scenario"] == "baseline"
    assert summary["seed"] == 7
    assert summary["N"] == 40
    assert len(pd.read_csv(tmp_path / "plan.csv")) == 41
    assert len(pd.read_csv(tmp_path / "path.csv")) == 41


def test_unreachable_speed_exits_infeasible(tmp_path):
    document = copy.deepcopy(baseline_document())
    document["mission"] |= {"v_final": 6.0, "N": 40}
    document["solver"]["friction_passes"] = 0
    scenario = write_scenario(document, tmp_path)
    assert main(["plan", "--scenario", str(scenario), "--out", str(tmp_path / "out")]) == EXIT_INFEASIBLE
    assert read_summary(tmp_path / "out" / "plan_summary.json")["status"] == "infeasible"


@pytest.mark.parametrize(
    "argv",
    [
        pytest.param(["plan", "no_such_scenario.json"], id="missing scenario"),
        pytest.param(["plan"], id="no scenario"),
        pytest.param([], id="no subcommand"),
        pytest.param(["plan", "baseline.json", "--backend", "gurobi"], id="unknown backend flag"),
        pytest.param(["sweep", "baseline.json", "--weights", "fast,slow"], id="bad weights"),
        pytest.param(["genpath"], id="missing seed"),
    ],
)
def test_input_errors_exit_one(argv):
    assert main(argv) == EXIT_INPUT


def test_unknown_backend_in_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(BACKEND_ENV, "gurobi")
    assert main(["plan", "baseline.json", "--out", str(tmp_path)]) == EXIT_INPUT


def test_help_exits_zero(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "plan" in capsys.readouterr().out


def test_sweep(tmp_path):
    code = main(["sweep", "baseline.json", "--nodes", "40", "--weights", "10,2", "--out", str(tmp_path)])
    assert code == EXIT_OK
    frame = pd.read_csv(tmp_path / "pareto.csv")
    assert frame["weight"].tolist() == [10.0, 2.0]
    summary = read_summary(tmp_path / "pareto_summary.json")
    assert summary["monotone"] == {"all": True}


def test_zigzag_simulation(tmp_path):
    code = main(["sim", "baseline.json", "--zigzag", "10", "--t-end", "5", "--h", "0.05", "--out", str(tmp_path)])
    assert code == EXIT_OK
    history = pd.read_csv(tmp_path / "zigzag.csv")
    assert list(history.columns) == list(HISTORY_COLUMNS)
    assert len(history) == 101
    assert read_summary(tmp_path / "zigzag_summary.json")["angle_deg"] == 10.0


def test_fit(tmp_path):
    assert main(["fit", str(WAGENINGEN_SAMPLE), "--workers", "1", "--out", str(tmp_path)]) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "fit_report.csv")) == 3
    summary = read_summary(tmp_path / "fit_summary.json")
    assert summary["propellers"] == 3
    assert summary["failures"] == []


def test_genpath_is_deterministic(tmp_path):
    for name in ("first", "second"):
        argv = ["genpath", "--seed", "11", "--count", "12", "--nodes", "50", "--out", str(tmp_path / name)]
        assert main(argv) == EXIT_OK
    for file in ("control_points.csv", "path.json", "path_samples.csv"):
        assert (tmp_path / "first" / file).read_bytes() == (tmp_path / "second" / file).read_bytes()
    assert len(pd.read_csv(tmp_path / "first" / "control_points.csv")) == 12
