from __future__ import annotations

import logging
import math
from contextlib import nullcontext

import cvxpy as cp
import numpy as np
import pytest

from sailcone import (
    BACKEND_ENV,
    ConfigurationError,
    IpmSettings,
    ProgramBuilder,
    SolverSettings,
    solve,
    solve_ipm,
)
from sailcone._backends import _status_from_cvxpy
from tests.conftest import parabola_program


def norm_program():
    """``min t`` subject to ``‖(x, y)‖ <= t`` and ``x + y = 2``."""
    builder = ProgramBuilder()
    xy = builder.add_variable("xy", 2)
    t = builder.add_variable("t", 1)
    builder.add_soc("norm", t.all, [xy[0], xy[1]])
    builder.add_equality("line", xy.all.sum() - 2.0)
    builder.minimize(t.all)
    return builder.build()


def infeasible_program():
    builder = ProgramBuilder()
    x = builder.add_variable("x", 1)
    builder.add_nonneg("above_one", x.all - 1.0)
    builder.add_nonneg("below_zero", -x.all)
    builder.minimize(x.all)
    return builder.build()


def infeasible_cone_program():
    """``‖(x, y)‖ <= t`` with ``t <= -1``."""
    builder = ProgramBuilder()
    xy = builder.add_variable("xy", 2)
    t = builder.add_variable("t", 1)
    builder.add_soc("norm", t.all, [xy[0], xy[1]])
    builder.add_nonneg("negative_t", -t.all - 1.0)
    builder.minimize(t.all)
    return builder.build()


def unbounded_program():
    builder = ProgramBuilder()
    x = builder.add_variable("x", 1)
    builder.add_nonneg("nonpositive", -x.all)
    builder.minimize(x.all)
    return builder.build()


def test_ipm_parabola():
    program = parabola_program()
    result = solve_ipm(program)
    assert result.status == "optimal"
    assert program.objective(result.x) == pytest.approx(1.75, abs=1e-7)
    assert result.x == pytest.approx([1.5, 0.25], abs=1e-4)
    assert result.pres < 1e-8
    assert result.iterations > 0


def test_ipm_norm_with_equality():
    result = solve_ipm(norm_program())
    assert result.status == "optimal"
    assert result.x == pytest.approx([1.0, 1.0, math.sqrt(2.0)], abs=1e-6)
    assert result.y.shape == (1,)


@pytest.mark.parametrize(
    ("program", "status"),
    [
        pytest.param(infeasible_program(), "infeasible", id="empty feasible set"),
        pytest.param(unbounded_program(), "unbounded", id="objective unbounded below"),
    ],
)
def test_ipm_certificates(program, status):
    assert solve_ipm(program).status == status


def test_ipm_iteration_limit():
    result = solve_ipm(norm_program(), IpmSettings(max_iter=1))
    assert result.status == "numerical-limit"


@pytest.mark.parametrize("backend", ["clarabel", "ipm"])
@pytest.mark.parametrize(
    ("program", "expected"),
    [
        pytest.param(parabola_program(), 1.75, id="parabola"),
        pytest.param(norm_program(), math.sqrt(2.0), id="norm"),
    ],
)
def test_backends_agree(backend, program, expected):
    solution = solve(program, SolverSettings(backend=backend))
    assert solution.is_optimal
    assert solution.backend == backend
    assert solution.objective == pytest.approx(expected, rel=1e-6)
    assert program.cone_violation(solution.x) < 1e-6


@pytest.mark.parametrize("backend", ["clarabel", "ipm"])
@pytest.mark.parametrize(
    ("program", "status"),
    [
        pytest.param(infeasible_program(), "infeasible", id="infeasible"),
        pytest.param(infeasible_cone_program(), "infeasible", id="infeasible with a cone"),
        pytest.param(unbounded_program(), "unbounded", id="unbounded"),
    ],
)
def test_status_is_reported_not_raised(backend, program, status):
    solution = solve(program, SolverSettings(backend=backend))
    assert solution.status == status
    assert not solution.is_optimal
    assert np.isnan(solution.objective)


def test_infeasible_cone_duals_are_nan():
    program = infeasible_cone_program()
    solution = solve(program, SolverSettings(backend="clarabel"))
    assert solution.status == "infeasible"
    assert solution.z.shape == (program.G.shape[0],)
    assert np.isnan(solution.z).all()


def test_cone_duals_have_program_layout():
    program = norm_program()
    solution = solve(program, SolverSettings(backend="clarabel"))
    assert solution.z.shape == (program.G.shape[0],)
    assert solution.y.shape == (1,)


@pytest.mark.parametrize(
    ("env", "expected_context", "expected"),
    [
        pytest.param(None, nullcontext(), "clarabel", id="unset"),
        pytest.param("IPM", nullcontext(), "ipm", id="override, any case"),
        pytest.param("gurobi", pytest.raises(ConfigurationError), None, id="unknown backend"),
    ],
)
def test_backend_from_environment(monkeypatch, env, expected_context, expected):
    if env is None:
        monkeypatch.delenv(BACKEND_ENV, raising=False)
    else:
        monkeypatch.setenv(BACKEND_ENV, env)
    with expected_context:
        assert SolverSettings().with_env().backend == expected


@pytest.mark.parametrize(
    "kwargs",
    [
        pytest.param({"backend": "mosek"}, id="unknown backend"),
        pytest.param({"tol": 0.0}, id="zero tolerance"),
        pytest.param({"max_iter": 0}, id="no iterations"),
        pytest.param({"workers": 0}, id="no workers"),
    ],
)
def test_settings_validation(kwargs):
    with pytest.raises(ValueError):
        SolverSettings(**kwargs)


def test_reduced_accuracy_counts_as_optimal(caplog):
    with caplog.at_level(logging.WARNING):
        assert _status_from_cvxpy(cp.OPTIMAL_INACCURATE) == "optimal"
    assert "reduced accuracy" in caplog.text
    assert _status_from_cvxpy(cp.INFEASIBLE_INACCURATE) == "infeasible"
    assert _status_from_cvxpy("user_limit") == "numerical-limit"
