from sailcone._backends import BACKEND_ENV, BACKENDS, ConeSolution, SolverSettings, solve
from sailcone._cli import main
from sailcone._cone import ConeProgram, LinExpr, ProgramBuilder
from sailcone._dp import DpResult, dp_oracle, grid_points
from sailcone._errors import (
    ConfigurationError,
    DegeneratePathError,
    DomainError,
    FitError,
    InfeasibleDirectionError,
    IntegrationError,
    MissionError,
    OracleInfeasibleError,
    SailconeError,
    ScenarioError,
)
from sailcone._hydro import (
    HullForceSet,
    RudderModel,
    VesselModel,
    added_mass_per_length,
    drag_epigraph_terms,
    drag_force,
    drift_force_bound,
    friction_coefficient,
    physical_forces,
    quad_over_lin,
    resistance_coefficient,
    rudder_angle_for_force,
    rudder_drag_epigraph,
    rudder_drag_physical,
    rudder_force_bound,
    rudder_inflow,
    rudder_lift_coefficient,
    yaw_damping_force,
)
from sailcone._io import read_summary, solution_frame, summary_dict, write_plan
from sailcone._ipm import IpmSettings, solve_ipm
from sailcone._mission import Interval, Mission, SpeedLimit
from sailcone._ocp import (
    PlanModels,
    PlanSolution,
    TightnessReport,
    build_program,
    check_tightness,
    recover_solution,
    solve_plan,
)
from sailcone._path import (
    PathSamples,
    PathSpec,
    bernstein_basis,
    bezier_derivative,
    bezier_eval,
    curvature,
    generate_random_path,
    path_length,
    sample_path,
    samples_frame,
)
from sailcone._powertrain import (
    BatteryModel,
    ConverterModel,
    DrivetrainModel,
    MachineLimits,
    battery_condition,
    battery_loss_epigraph,
    converter_force,
    converter_fuel,
    converter_schedule,
    em_force_and_limits,
    energy_balance_residual,
    soc_trajectory,
    steady_state_power,
    taylor_power_bound,
)
from sailcone._propeller import (
    FitBatch,
    FitReport,
    OpenWaterCurve,
    OpenWaterFit,
    PropellerModel,
    WageningenTerm,
    energy_input_epigraph,
    eval_wageningen,
    fit_coefficient_file,
    fit_poly2,
    open_water_efficiency,
    physical_thrust,
    physical_torque,
    read_wageningen_file,
    shaft_speed_for_thrust,
    theorem_condition,
    thrust,
    torque,
)
from sailcone._scenario import Scenario, parse_scenario, parse_scenario_dict
from sailcone._sim import (
    Controls,
    ManeuverScript,
    ResimResult,
    RudderEvent,
    SimState,
    ZigzagMetrics,
    integrate,
    resimulate_plan,
    run_maneuver,
    run_zigzag,
    steady_shaft_speed,
    step_rk2,
    zigzag_metrics,
)
from sailcone._sweep import DEFAULT_WEIGHTS, ParetoPoint, converter_comparison, is_monotone_tradeoff, pareto_sweep

__all__ = [
    "BACKENDS",
    "BACKEND_ENV",
    "DEFAULT_WEIGHTS",
    "BatteryModel",
    "ConeProgram",
    "ConeSolution",
    "ConfigurationError",
    "Controls",
    "ConverterModel",
    "DegeneratePathError",
    "DomainError",
    "DpResult",
    "DrivetrainModel",
    "FitBatch",
    "FitError",
    "FitReport",
    "HullForceSet",
    "InfeasibleDirectionError",
    "IntegrationError",
    "Interval",
    "IpmSettings",
    "LinExpr",
    "MachineLimits",
    "ManeuverScript",
    "Mission",
    "MissionError",
    "OpenWaterCurve",
    "OpenWaterFit",
    "OracleInfeasibleError",
    "ParetoPoint",
    "PathSamples",
    "PathSpec",
    "PlanModels",
    "PlanSolution",
    "ProgramBuilder",
    "PropellerModel",
    "ResimResult",
    "RudderEvent",
    "RudderModel",
    "SailconeError",
    "Scenario",
    "ScenarioError",
    "SimState",
    "SolverSettings",
    "SpeedLimit",
    "TightnessReport",
    "VesselModel",
    "WageningenTerm",
    "ZigzagMetrics",
    "added_mass_per_length",
    "battery_condition",
    "battery_loss_epigraph",
    "bernstein_basis",
    "bezier_derivative",
    "bezier_eval",
    "build_program",
    "check_tightness",
    "converter_comparison",
    "converter_force",
    "converter_fuel",
    "converter_schedule",
    "curvature",
    "dp_oracle",
    "drag_epigraph_terms",
    "drag_force",
    "drift_force_bound",
    "em_force_and_limits",
    "energy_balance_residual",
    "energy_input_epigraph",
    "eval_wageningen",
    "fit_coefficient_file",
    "fit_poly2",
    "friction_coefficient",
    "generate_random_path",
    "grid_points",
    "integrate",
    "is_monotone_tradeoff",
    "main",
    "open_water_efficiency",
    "parse_scenario",
    "parse_scenario_dict",
    "pareto_sweep",
    "path_length",
    "physical_forces",
    "physical_thrust",
    "physical_torque",
    "quad_over_lin",
    "read_summary",
    "read_wageningen_file",
    "recover_solution",
    "resimulate_plan",
    "resistance_coefficient",
    "rudder_angle_for_force",
    "rudder_drag_epigraph",
    "rudder_drag_physical",
    "rudder_force_bound",
    "rudder_inflow",
    "rudder_lift_coefficient",
    "run_maneuver",
    "run_zigzag",
    "sample_path",
    "samples_frame",
    "shaft_speed_for_thrust",
    "soc_trajectory",
    "solution_frame",
    "solve",
    "solve_ipm",
    "solve_plan",
    "steady_shaft_speed",
    "steady_state_power",
    "step_rk2",
    "summary_dict",
    "taylor_power_bound",
    "theorem_condition",
    "thrust",
    "torque",
    "write_plan",
    "yaw_damping_force",
    "zigzag_metrics",
]
