from __future__ import annotations

import logging
from functools import cache

import attrs
import pytest

from sailcone import (
    DEFAULT_WEIGHTS,
    ParetoPoint,
    SolverSettings,
    converter_comparison,
    is_monotone_tradeoff,
    pareto_sweep,
    parse_scenario,
    sample_path,
    solve_plan,
)
from tests.conftest import reference_mission, reference_models, straight_spec

SETTINGS = SolverSettings(friction_passes=0, workers=2)


@cache
def _baseline_curves():
    scenario = parse_scenario("baseline.json").with_nodes(99)
    return converter_comparison(scenario.samples(), scenario.models, [25.0, 50.0], settings=SETTINGS)


def test_pareto_points_are_sorted_and_monotone():
    points = _baseline_curves()[50.0]
    assert len(points) == len(DEFAULT_WEIGHTS)
    assert all(p.status == "optimal" for p in points)
    times = [p.time for p in points]
    assert times == sorted(times)
    assert is_monotone_tradeoff(points)
    assert points[0].weight == max(DEFAULT_WEIGHTS)


def test_smaller_converter_is_slower():
    curves = _baseline_curves()
    assert set(curves) == {25.0, 50.0}
    assert is_monotone_tradeoff(curves[25.0])
    assert min(p.time for p in curves[25.0]) > min(p.time for p in curves[50.0])


def test_failed_weight_is_dropped_and_logged(caplog):
    nodes = 30
    models = reference_models(mission=reference_mission(N=nodes))
    with caplog.at_level(logging.WARNING):
        points = pareto_sweep(sample_path(straight_spec(), nodes), models, [2.0, -1.0], SETTINGS)
    assert [p.weight for p in points] == [2.0]
    assert "pareto point failed" in caplog.text


def test_sweep_matches_single_solves():
    nodes = 30
    path = sample_path(straight_spec(), nodes)
    models = reference_models(mission=reference_mission(N=nodes))
    (point,) = pareto_sweep(path, models, [2.0], SETTINGS)
    sol = solve_plan(path, attrs.evolve(models, mission=attrs.evolve(models.mission, omega_T=2.0)), SETTINGS)
    assert point.time == pytest.approx(sol.time_total)
    assert point.fuel == pytest.approx(sol.fuel_total)


@pytest.mark.parametrize(
    ("fuels", "expected"),
    [
        pytest.param([5.0, 4.0, 3.0], True, id="fuel falls with time"),
        pytest.param([5.0, 5.0, 3.0], True, id="flat segment"),
        pytest.param([5.0, 6.0, 3.0], False, id="fuel rises with time"),
    ],
)
def test_is_monotone_tradeoff(fuels, expected):
    points = [ParetoPoint(10.0 - k, 100.0 + k, fuel, "optimal") for k, fuel in enumerate(fuels)]
    assert is_monotone_tradeoff(points) is expected


def test_non_optimal_points_are_ignored_by_monotonicity():
    points = [
        ParetoPoint(10.0, 100.0, 5.0, "optimal"),
        ParetoPoint(5.0, 110.0, 9.0, "numerical-limit"),
        ParetoPoint(2.0, 120.0, 4.0, "optimal"),
    ]
    assert is_monotone_tradeoff(points)
