from __future__ import annotations

import json
import math
from functools import cache
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from sailcone import (
    BatteryModel,
    ConeProgram,
    ConverterModel,
    DrivetrainModel,
    Mission,
    PathSpec,
    PlanModels,
    PlanSolution,
    ProgramBuilder,
    PropellerModel,
    RudderModel,
    SolverSettings,
    VesselModel,
    parse_scenario,
    sample_path,
    solve_plan,
)

REPO_ROOT = Path(__file__).parents[1]
DATA_DIR = REPO_ROOT / "tests" / "data"
WAGENINGEN_SAMPLE = DATA_DIR / "wageningen_sample.csv"

STRAIGHT_POINTS = [[0.0, 0.0], [25.0, 0.0], [50.0, 0.0], [75.0, 0.0], [100.0, 0.0]]
BEND_POINTS = [[0.0, 0.0], [25.0, 0.0], [50.0, 8.0], [75.0, 8.0], [100.0, 0.0]]


def reference_rudder(**overrides: Any) -> RudderModel:  # noqa: ANN401
    values = {"A_R": 0.012, "b_R": 0.124, "omega_max": math.radians(20.0), "k_tm": 1.0, "drag_rho_power": 1}
    return RudderModel(**(values | overrides))


def reference_vessel(**overrides: Any) -> VesselModel:  # noqa: ANN401
    values = {
        "m": 189.0,
        "k1": 0.05,
        "k2": 0.8,
        "Izz": 201.0,
        "Iw": 251.0,
        "L_H": 1.0,
        "L_P": 9.5,
        "L_R": 1.85,
        "S": 1.18,
        "a_L1": 0.42,
        "beta_max": math.radians(10.0),
        "C_R": 0.001,
        "A_s": 2.361,
        "Omega": 20.2,
        "L": 4.002,
        "T": 0.173,
        "rudder": reference_rudder(),
    }
    return VesselModel(**(values | overrides))


def reference_propeller(**overrides: Any) -> PropellerModel:  # noqa: ANN401
    values = {"D_p": 0.173, "f_w": 0.2, "a_T0": 0.3, "a_T2": 0.35, "a_Q0": 0.041, "a_Q2": 0.041, "k_p": 2}
    return PropellerModel(**(values | overrides))


def reference_drivetrain(**overrides: Any) -> DrivetrainModel:  # noqa: ANN401
    values = {
        "i_g": 10.0,
        "n_EM_max": 1566.0 / (2.0 * math.pi),
        "Q_EM_max": 0.102,
        "P_EM_max": 60.0,
        "v_ref": 1.5,
        "eta_EM": 0.88,
        "eta_g": 0.98,
        "eta_inv": 0.97,
    }
    return DrivetrainModel(**(values | overrides))


def reference_converter(**overrides: Any) -> ConverterModel:  # noqa: ANN401
    return ConverterModel(**({"a_c0": 0.174, "a_c1": 0.945, "P_c_max": 50.0, "K": 2} | overrides))


def reference_battery(**overrides: Any) -> BatteryModel:  # noqa: ANN401
    values = {"P_cha_max": 60.0, "P_dis_max": 60.0, "U0": 48.0, "R_i": 0.053, "eta_dcdc": 0.95}
    return BatteryModel.from_capacity(E_max_Wh=10.0, E0_Wh=5.0, **(values | overrides))


def no_battery() -> BatteryModel:
    return BatteryModel(U0=48.0, R_i=0.053, E0=0.0, dE_min=0.0, dE_max=0.0, P_cha_max=0.0, P_dis_max=0.0)


def reference_mission(**overrides: Any) -> Mission:  # noqa: ANN401
    values = {"v_init": 1.0, "v_final": 1.0, "omega_T": 2.0, "P_aux": 1.0, "N": 60}
    return Mission(**(values | overrides))


def reference_models(
    mission: Mission | None = None, batt: BatteryModel | None = None, conv: ConverterModel | None = None
) -> PlanModels:
    return PlanModels(
        vessel=reference_vessel(),
        prop=reference_propeller(),
        drv=reference_drivetrain(),
        conv=conv or reference_converter(),
        batt=batt or no_battery(),
        mission=mission or reference_mission(),
    )


def straight_spec() -> PathSpec:
    return PathSpec(STRAIGHT_POINTS)


def bend_spec() -> PathSpec:
    return PathSpec(BEND_POINTS)


def baseline_document() -> dict[str, Any]:
    text = (resources.files("sailcone") / "scenarios" / "baseline.json").read_text(encoding="utf-8")
    return json.loads(text)


def write_scenario(document: dict[str, Any], directory: Path, name: str = "scenario.json") -> Path:
    path = directory / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


@cache
def straight_plan(nodes: int = 60, friction_passes: int = 0, backend: str = "clarabel") -> PlanSolution:
    models = reference_models(mission=reference_mission(N=nodes))
    settings = SolverSettings(backend=backend, friction_passes=friction_passes)
    return solve_plan(sample_path(straight_spec(), nodes), models, settings)


@cache
def bend_plan(nodes: int = 80) -> PlanSolution:
    models = reference_models(mission=reference_mission(N=nodes), batt=reference_battery())
    return solve_plan(sample_path(bend_spec(), nodes), models, SolverSettings())


@cache
def baseline_plan(nodes: int | None = None) -> PlanSolution:
    scenario = parse_scenario("baseline.json")
    if nodes is not None:
        scenario = scenario.with_nodes(nodes)
    return solve_plan(scenario.samples(), scenario.models, scenario.settings)


@cache
def unreachable_plan(nodes: int = 40) -> PlanSolution:
    """Straight run asked to finish at 6 m/s, far beyond the drivetrain limits."""
    models = reference_models(mission=reference_mission(N=nodes, v_final=6.0))
    return solve_plan(sample_path(straight_spec(), nodes), models, SolverSettings(friction_passes=0))


def parabola_program(offset: float = 2.0) -> ConeProgram:
    """``min t + x`` subject to ``(x − offset)² <= t``; optimum at ``x = offset − 0.5``."""
    builder = ProgramBuilder()
    x = builder.add_variable("x", 1)
    t = builder.add_variable("t", 1)
    builder.add_rotated("square", t.all, 1.0, x.all - offset)
    builder.minimize(t.all + x.all)
    return builder.build()


def finite_difference_hessian(fn: Any, point: np.ndarray, step: float = 1e-4) -> np.ndarray:  # noqa: ANN401
    """Central-difference Hessian of a scalar function, step relative to each coordinate."""
    point = np.asarray(point, dtype=float)
    h = step * np.where(point != 0.0, np.abs(point), 1.0)
    size = point.size
    hess = np.empty((size, size))
    for i in range(size):
        for j in range(size):
            ei, ej = np.zeros(size), np.zeros(size)
            ei[i], ej[j] = h[i], h[j]
            hess[i, j] = (
                fn(point + ei + ej) - fn(point + ei - ej) - fn(point - ei + ej) + fn(point - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return 0.5 * (hess + hess.T)


def is_psd(matrix: np.ndarray, rtol: float = 1e-6) -> bool:
    eig = np.linalg.eigvalsh(matrix)
    return bool(eig.min() >= -rtol * max(1.0, float(np.abs(eig).max())))
