from __future__ import annotations

import logging
import time

import attrs
import numpy as np
from attrs.validators import instance_of
from numpy.typing import NDArray

from sailcone._backends import ConeSolution, SolverSettings, solve
from sailcone._cone import ConeProgram, LinExpr, ProgramBuilder, VariableBlock
from sailcone._errors import MissionError
from sailcone._hydro import (
    VesselModel,
    added_mass_per_length,
    disk_loading_area,
    induced_drag_factor,
    resistance_coefficient,
    rudder_drag_factor,
    rudder_lift_coefficient,
    yaw_damping_force,
)
from sailcone._ipm import Status
from sailcone._mission import Mission
from sailcone._path import PathSamples
from sailcone._powertrain import (
    BatteryModel,
    ConverterModel,
    DrivetrainModel,
    battery_condition,
    converter_force,
    converter_fuel,
    converter_schedule,
    energy_balance_residual,
    soc_rate_scale,
)
from sailcone._propeller import PropellerModel, theorem_condition, thrust, torque

logger = logging.getLogger(__name__)

KJ = 1000.0


@attrs.define(frozen=True, kw_only=True)
class PlanModels:
    """Every physical model the planner needs, bundled for a solve."""

    vessel: VesselModel = attrs.field(validator=instance_of(VesselModel))
    prop: PropellerModel = attrs.field(validator=instance_of(PropellerModel))
    drv: DrivetrainModel = attrs.field(validator=instance_of(DrivetrainModel))
    conv: ConverterModel = attrs.field(validator=instance_of(ConverterModel))
    batt: BatteryModel = attrs.field(validator=instance_of(BatteryModel))
    mission: Mission = attrs.field(validator=instance_of(Mission))


def reference_friction(path: PathSamples, vessel: VesselModel, drv: DrivetrainModel, mission: Mission) -> NDArray[np.float64]:
    """``C_F + C_R`` per control node at the Taylor reference speed, capped by speed limits."""
    sigma = path.sigma[:-1]
    v = np.minimum(drv.v_ref, mission.speed_cap(sigma))
    return resistance_coefficient(v, vessel)


def _taylor(P_max: float, B: LinExpr, sp: NDArray, v_ref: float) -> LinExpr:  # noqa: N803
    """Affine tangent ``(P/2)(√s'12/v_r)(3 − s'12 b/v_r²)`` as an expression in ``b``."""
    slope = 0.5 * P_max * np.sqrt(sp) / v_ref
    return 3.0 * slope - (slope * sp / v_ref**2) * B


def build_program(  # noqa: PLR0913, PLR0915
    path: PathSamples,
    vessel: VesselModel,
    prop: PropellerModel,
    drv: DrivetrainModel,
    conv: ConverterModel,
    batt: BatteryModel,
    mission: Mission,
    *,
    friction: NDArray[np.float64] | None = None,
) -> ConeProgram:
    """Discretize the minimum time-and-fuel problem along ``path`` into a cone program.

    States ``b`` and ``ΔE`` live on the ``N + 1`` nodes, controls on nodes ``0..N−1`` with a
    forward difference for ``b'`` and ``ΔE'``. ``friction`` overrides ``C_F + C_R`` per
    control node; by default it follows ``reference_friction``.

    .. code-block:: python

        from sailcone import build_program, sample_path

        program = build_program(sample_path(spec, 399), vessel, prop, drv, conv, batt, mission)
        program.summary()
    """
    n = path.n_intervals
    if mission.N != n:
        raise MissionError(f"mission has N={mission.N} but the path is sampled with {n} intervals")
    if mission.v_init <= 0.0:
        raise MissionError("the planner needs a positive initial speed (y_t >= 1/√b at node 0)")
    if vessel.rudder.drag_rho_power == 2:  # noqa: PLR2004
        logger.warning("rudder drag uses ρ² in the convex bound; the simulator uses ρ")

    d_sigma = path.d_sigma
    sp_all = path.sp12
    sp_bar = float(np.median(sp_all))
    root_bar = float(np.sqrt(sp_bar))
    sp = sp_all[:n]
    sigma_c = path.sigma[:n]
    theta, thetap, thetapp = path.theta[:n], path.thetap[:n], path.thetapp[:n]
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    friction = reference_friction(path, vessel, drv, mission) if friction is None else np.asarray(friction, dtype=float)
    if friction.shape != (n,):
        raise MissionError(f"friction needs one value per control node ({n}), got {friction.shape}")
    k_c = converter_schedule(sigma_c, mission, conv, vessel, prop, drv)
    forced_off = (k_c == 0) | mission.in_battery_only(sigma_c)

    builder = ProgramBuilder()
    b = builder.add_variable("b", n + 1, 1.0 / sp_bar)
    dE = builder.add_variable("dE", n + 1, KJ)  # noqa: N806
    F_D = builder.add_variable("F_D", n)  # noqa: N806
    F_H = builder.add_variable("F_H", n)  # noqa: N806
    F_R = builder.add_variable("F_R", n)  # noqa: N806
    D_R = builder.add_variable("D_R", n)  # noqa: N806
    y_t = builder.add_variable("y_t", n, root_bar)
    w = builder.add_variable("w", n, 1.0 / root_bar)
    z = builder.add_variable("z", n)
    ntil = builder.add_variable("ntil", n)
    q = builder.add_variable("q", n)
    F_c = builder.add_variable("F_c", n, root_bar)  # noqa: N806
    F_bat = builder.add_variable("F_bat", n, root_bar)  # noqa: N806
    F_batd = builder.add_variable("F_batd", n, root_bar)  # noqa: N806
    F_dEp = builder.add_variable("F_dEp", n, root_bar)  # noqa: N806

    def phys(block: VariableBlock, key: slice = slice(None)) -> LinExpr:
        return block[key] * block.scale

    B_all = phys(b)  # noqa: N806
    B, B_next = phys(b, slice(0, n)), phys(b, slice(1, n + 1))  # noqa: N806
    b_prime = (B_next - B) / d_sigma
    V2 = sp * B  # noqa: N806
    fd, fh, fr, dr = F_D.all, F_H.all, F_R.all, D_R.all
    zz, nn = z.all, ntil.all
    T_p = (-prop.a_tilde_T3 * sp) * B - prop.a_tilde_T2 * zz + prop.a_tilde_T1 * nn  # noqa: N806
    Q_p = (-prop.a_tilde_Q3 * sp) * B - prop.a_tilde_Q2 * zz + prop.a_tilde_Q1 * nn  # noqa: N806
    F_P = (vessel.x_T * added_mass_per_length(vessel) * thetap * np.sqrt(sp)) * B  # noqa: N806
    yt = phys(y_t)
    fc, fbat, fbatd, fdep = phys(F_c), phys(F_bat), phys(F_batd), phys(F_dEp)

    # dynamics, rotated into the earth frame
    surge = prop.k_p * T_p - fd - dr
    sway = fh + F_P - fr
    tau_x, tau_y, tau_yaw = vessel.tau
    builder.add_equality(
        "dynamics_x",
        cos_t * surge - sin_t * sway - vessel.m_eff * ((0.5 * path.s1p[:n]) * b_prime + path.s1pp[:n] * B) - tau_x,
    )
    builder.add_equality(
        "dynamics_y",
        sin_t * surge + cos_t * sway - vessel.m_eff * ((0.5 * path.s2p[:n]) * b_prime + path.s2pp[:n] * B) - tau_y,
    )
    builder.add_equality(
        "dynamics_yaw",
        vessel.L_H * fh
        - vessel.L_P * F_P
        + vessel.L_R * fr
        - vessel.I_eff * ((0.5 * thetap) * b_prime + thetapp * B)
        - tau_yaw,
    )

    # battery energy deviation, in kJ
    dE_next, dE_here = dE[1 : n + 1], dE[0:n]  # noqa: N806
    builder.add_equality(
        "soc",
        (dE_next - dE_here) / d_sigma + (soc_rate_scale(sp, batt) / KJ) * fbat,
    )

    builder.add_equality("b_init", b[0] - mission.v_init**2 / sp_all[0] * sp_bar)
    builder.add_equality("b_final", b[n] - mission.v_final**2 / sp_all[n] * sp_bar)
    builder.add_equality("dE_init", dE[0])
    if batt.soc_sustaining:
        builder.add_equality("dE_final", dE[n])
    off = np.flatnonzero(forced_off)
    if off.size:
        builder.add_equality("converter_off", F_c[off])

    # hull and rudder
    drift = (0.5 * vessel.rho * vessel.S * vessel.C_L_max * sp) * B
    builder.add_nonneg("drift_upper", drift - fh)
    builder.add_nonneg("drift_lower", drift + fh)
    c_drag = 0.5 * vessel.rho * friction * vessel.A_s
    builder.add_rotated("drag", fd - (c_drag * sp) * B, V2 / induced_drag_factor(vessel), fh)

    rudder = vessel.rudder
    inflow = prop.wake**2 * V2 + T_p / disk_loading_area(prop)
    c_k = float(rudder_lift_coefficient(rudder.omega_max, rudder))
    rudder_bound = (0.5 * vessel.rho * c_k * rudder.A_R * rudder.k_tm**2) * inflow
    builder.add_nonneg("rudder_upper", rudder_bound - fr)
    builder.add_nonneg("rudder_lower", rudder_bound + fr)
    builder.add_rotated("rudder_drag", dr, inflow / rudder_drag_factor(vessel), fr)
    builder.add_nonneg("thrust_nonneg", T_p)

    # time and propeller relaxations
    one = LinExpr.constant(1.0, n)
    builder.add_rotated("time_root", b[0:n], 1.0, w.all)
    builder.add_rotated("time_inverse", y_t.all, w.all, one)
    builder.add_nonneg("z_nonneg", zz)
    builder.add_rotated("z_mean", V2, nn, zz)
    builder.add_rotated("energy_ratio", q.all, zz, nn)
    root = np.sqrt(sp)
    builder.add_nonneg(
        "energy_input",
        fdep - root * (-prop.k_dEp3 * zz - prop.k_dEp2 * nn + prop.k_dEp1 * q.all),
    )

    # machine, converter and battery limits
    builder.add_nonneg("shaft_speed_limit", drv.ntil_max - nn)
    builder.add_nonneg("torque_limit", drv.Q_p_max - Q_p)
    builder.add_nonneg("em_power_limit", _taylor(drv.P_EM_max, B, sp, drv.v_ref) - fdep / drv.eta_tilde)
    builder.add_nonneg("converter_nonneg", fc)
    builder.add_nonneg("converter_limit", _taylor(conv.P_c_max, B, sp, drv.v_ref) - fc)
    builder.add_nonneg("discharge_limit", _taylor(batt.P_dis_max, B, sp, drv.v_ref) - fbat)
    builder.add_nonneg("charge_limit", _taylor(batt.P_cha_max, B, sp, drv.v_ref) + fbat)
    builder.add_rotated("battery_loss", fbatd * (batt.U0**2 / batt.R_i), yt, fbat)
    builder.add_nonneg("dE_lower", phys(dE) - batt.dE_min)
    builder.add_nonneg("dE_upper", batt.dE_max - phys(dE))
    balance = (
        k_c * fc + batt.eta_dcdc * fbat - (prop.k_p / drv.eta_tilde) * fdep - mission.P_aux * yt - fbatd
    )
    builder.add_nonneg("energy_balance", balance / root_bar)

    caps = mission.speed_cap(path.sigma)
    limited = np.flatnonzero(np.isfinite(caps))
    if limited.size:
        builder.add_nonneg("speed_limit", caps[limited] ** 2 - (sp_all[limited] / sp_bar) * b[limited])
    builder.add_nonneg("b_nonneg", B_all * sp_bar)

    builder.minimize(((k_c * conv.a_c0 + mission.omega_T) * d_sigma) * yt + ((k_c * conv.a_c1) * d_sigma) * fc)
    builder.meta.update(
        sp_bar=sp_bar, d_sigma=d_sigma, k_c=k_c, forced_off=forced_off, friction=friction
    )
    program = builder.build()
    logger.info(f"planner program: {program.summary()}")
    return program


@attrs.define(frozen=True)
class TightnessReport:
    """Per-node residuals of the three relaxations and the flags explaining slack."""

    y_residual: NDArray[np.float64]
    z_residual: NDArray[np.float64]
    balance_residual: NDArray[np.float64]
    converter_idle: NDArray[np.bool_]
    em_limit: NDArray[np.bool_]
    battery_ok: NDArray[np.bool_]
    propeller_condition: bool
    tol: float

    @property
    def max_y(self) -> float:
        return float(np.max(self.y_residual, initial=0.0))

    @property
    def max_z(self) -> float:
        return float(np.max(self.z_residual, initial=0.0))

    @property
    def max_balance(self) -> float:
        return float(np.max(self.balance_residual, initial=0.0))

    @property
    def explained(self) -> NDArray[np.bool_]:
        """Nodes where the sufficient conditions fail, so slack is allowed."""
        return self.converter_idle | self.em_limit | ~self.battery_ok | (not self.propeller_condition)

    @property
    def slack(self) -> NDArray[np.bool_]:
        return (
            (self.y_residual > self.tol)
            | (self.z_residual > self.tol)
            | (self.balance_residual > self.tol)
        )

    @property
    def unexplained(self) -> NDArray[np.int_]:
        return np.flatnonzero(self.slack & ~self.explained)

    @property
    def flagged(self) -> NDArray[np.int_]:
        return np.flatnonzero(self.slack & self.explained)

    def as_dict(self) -> dict[str, float | int]:
        return {
            "max_y_residual": self.max_y,
            "max_z_residual": self.max_z,
            "max_balance_residual": self.max_balance,
            "flagged_nodes": int(self.flagged.size),
            "unexplained_nodes": int(self.unexplained.size),
        }


@attrs.define(frozen=True)
class EnergyTotals:
    """Voyage energy flows in J."""

    propulsion: float
    auxiliary: float
    battery_losses: float
    converter_output: float
    battery_output: float


@attrs.define(frozen=True, eq=False)
class PlanSolution:
    """Planner result in physical units.

    States ``b`` and ``dE`` have ``N + 1`` entries; controls have ``N``.
    """

    status: Status
    backend: str
    path: PathSamples
    models: PlanModels
    b: NDArray[np.float64]
    dE: NDArray[np.float64]
    F_D: NDArray[np.float64]
    F_H: NDArray[np.float64]
    F_R: NDArray[np.float64]
    D_R: NDArray[np.float64]
    y_t: NDArray[np.float64]
    z: NDArray[np.float64]
    ntil: NDArray[np.float64]
    F_c: NDArray[np.float64]
    F_bat: NDArray[np.float64]
    F_batd: NDArray[np.float64]
    F_dEp: NDArray[np.float64]
    k_c: NDArray[np.int_]
    forced_off: NDArray[np.bool_]
    friction: NDArray[np.float64]
    duals: dict[str, NDArray[np.float64]]
    solve_time: float
    iterations: int
    friction_passes: int = 0
    tightness: TightnessReport | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def sigma(self) -> NDArray[np.float64]:
        return self.path.sigma

    @property
    def d_sigma(self) -> float:
        return self.path.d_sigma

    @property
    def _sp(self) -> NDArray[np.float64]:
        return self.path.sp12[:-1]

    @property
    def _b_c(self) -> NDArray[np.float64]:
        return np.maximum(self.b[:-1], 0.0)

    @property
    def v(self) -> NDArray[np.float64]:
        return np.sqrt(self.path.sp12 * np.maximum(self.b, 0.0))

    @property
    def T_p(self) -> NDArray[np.float64]:  # noqa: N802
        return thrust(self.b[:-1], self.z, self.ntil, self._sp, self.models.prop)

    @property
    def Q_p(self) -> NDArray[np.float64]:  # noqa: N802
        return torque(self.b[:-1], self.z, self.ntil, self._sp, self.models.prop)

    @property
    def F_P(self) -> NDArray[np.float64]:  # noqa: N802
        return yaw_damping_force(self.b[:-1], self._sp, self.path.thetap[:-1], self.models.vessel)

    @property
    def n_p(self) -> NDArray[np.float64]:
        return np.sqrt(np.maximum(self.ntil, 0.0))

    @property
    def F_EM(self) -> NDArray[np.float64]:  # noqa: N802
        return self.F_dEp / self.models.drv.eta_tilde

    @property
    def F_c_int(self) -> NDArray[np.float64]:
        return converter_force(self.F_c, self.y_t, self.models.conv)

    @property
    def P_prop(self) -> NDArray[np.float64]:  # noqa: N802
        return self.models.prop.k_p * self.F_dEp * np.sqrt(self._b_c)

    @property
    def P_c(self) -> NDArray[np.float64]:  # noqa: N802
        return self.k_c * self.F_c * np.sqrt(self._b_c)

    @property
    def P_batt(self) -> NDArray[np.float64]:  # noqa: N802
        return self.F_bat * np.sqrt(self._b_c)

    @property
    def soc(self) -> NDArray[np.float64]:
        return self.models.batt.soc(self.dE)

    @property
    def fuel(self) -> NDArray[np.float64]:
        """Converter fuel per control node in mg."""
        return converter_fuel(self.F_c, self.y_t, self.k_c, self.models.conv) * self.d_sigma

    @property
    def time_total(self) -> float:
        return float(np.sum(self.y_t) * self.d_sigma)

    @property
    def fuel_total(self) -> float:
        return float(np.sum(self.fuel))

    @property
    def objective(self) -> float:
        return self.fuel_total + self.models.mission.omega_T * self.time_total

    @property
    def energy(self) -> EnergyTotals:
        ds = self.d_sigma
        return EnergyTotals(
            propulsion=float(np.sum(self.models.prop.k_p * self.F_dEp) * ds),
            auxiliary=float(np.sum(self.models.mission.P_aux * self.y_t) * ds),
            battery_losses=float(np.sum(self.F_batd) * ds),
            converter_output=float(np.sum(self.k_c * self.F_c) * ds),
            battery_output=float(np.sum(self.F_bat) * ds),
        )


_CONTROL_NAMES = ("F_D", "F_H", "F_R", "D_R", "y_t", "z", "ntil", "F_c", "F_bat", "F_batd", "F_dEp")


def _duals(program: ConeProgram, solution: ConeSolution) -> dict[str, NDArray[np.float64]]:
    out = {blk.tag: solution.y[blk.start : blk.stop] for blk in program.equalities}
    out.update({blk.tag: solution.z[blk.start : blk.stop] for blk in program.blocks})
    return out


def recover_solution(
    program: ConeProgram,
    solution: ConeSolution,
    path: PathSamples,
    models: PlanModels,
    friction_passes: int = 0,
) -> PlanSolution:
    """Undo the variable scaling and attach the node bookkeeping."""
    values = {block.name: block.physical(solution.x) for block in program.variables}
    meta = program.meta
    return PlanSolution(
        status=solution.status,
        backend=solution.backend,
        path=path,
        models=models,
        b=values["b"],
        dE=values["dE"],
        **{name: values[name] for name in _CONTROL_NAMES},
        k_c=meta["k_c"],
        forced_off=meta["forced_off"],
        friction=meta["friction"],
        duals=_duals(program, solution),
        solve_time=solution.solve_time,
        iterations=solution.iterations,
        friction_passes=friction_passes,
    )


def check_tightness(sol: PlanSolution, models: PlanModels | None = None, tol: float = 1e-5) -> TightnessReport:
    """Residuals of ``y_t = 1/√b``, ``z = √(s'12 b ñ)`` and the energy balance per control node.

    Nodes where the converter is off or idle, where the machine sits at its speed or torque
    limit, or where battery dissipation exceeds ``P_aux`` are flagged so slack there is
    explainable.

    .. code-block:: python

        from sailcone import check_tightness

        report = check_tightness(solution)
        report.max_y <= 1e-5
    """
    models = models or sol.models
    prop, drv, batt, mission = models.prop, models.drv, models.batt, models.mission
    b = np.maximum(sol.b[:-1], 0.0)
    sp = sol.path.sp12[:-1]

    y_res = np.abs(sol.y_t * np.sqrt(b) - 1.0)
    z_tight = np.sqrt(np.maximum(sp * b * sol.ntil, 0.0))
    z_res = np.abs(sol.z - z_tight) / np.maximum(1.0, np.abs(sol.z))
    residual = energy_balance_residual(
        sol.F_dEp, sol.y_t, sol.F_batd, sol.F_c, sol.F_bat, sol.k_c,
        prop=prop, drv=drv, batt=batt, P_aux=mission.P_aux,
    )
    largest = np.max(
        np.abs(
            np.vstack(
                [
                    prop.k_p * sol.F_dEp / drv.eta_tilde,
                    mission.P_aux * sol.y_t,
                    sol.F_batd,
                    sol.k_c * sol.F_c,
                    batt.eta_dcdc * sol.F_bat,
                ]
            )
        ),
        axis=0,
    )
    balance_res = np.abs(residual) / np.maximum(largest, 1e-12)

    fc_scale = max(1.0, float(np.max(np.abs(sol.F_c), initial=0.0)))
    converter_idle = sol.forced_off | (sol.k_c == 0) | (sol.F_c <= tol * fc_scale)
    em_limit = (sol.ntil >= drv.ntil_max * (1.0 - tol)) | (sol.Q_p >= drv.Q_p_max * (1.0 - tol))
    battery_ok = battery_condition(sol.F_bat, b, batt, mission.P_aux)
    if not np.all(battery_ok):
        logger.warning(f"battery dissipation exceeds P_aux at {int(np.sum(~battery_ok))} node(s)")

    report = TightnessReport(
        y_residual=y_res,
        z_residual=z_res,
        balance_residual=balance_res,
        converter_idle=converter_idle,
        em_limit=em_limit,
        battery_ok=battery_ok,
        propeller_condition=theorem_condition(prop).holds,
        tol=tol,
    )
    if report.unexplained.size:
        logger.warning(f"relaxation slack at {report.unexplained.size} unflagged node(s): {report.unexplained[:10]}")
    if report.flagged.size:
        logger.info(f"relaxation slack at {report.flagged.size} flagged node(s)")
    return report


def solve_plan(
    path: PathSamples,
    models: PlanModels,
    settings: SolverSettings | None = None,
) -> PlanSolution:
    """Build, solve, recover and check one plan, refining the friction coefficient per pass.

    Pass 0 uses ``reference_friction``; each of ``settings.friction_passes`` further passes
    evaluates ``C_F`` at the previous optimum's node speeds.

    .. code-block:: python

        from sailcone import SolverSettings, solve_plan

        solution = solve_plan(samples, models, SolverSettings(backend="clarabel"))
        solution.time_total, solution.fuel_total
    """
    settings = settings or SolverSettings()
    friction = None
    sol = None
    start = time.perf_counter()
    for pass_no in range(settings.friction_passes + 1):
        logger.info(f"planner pass {pass_no} started")
        program = build_program(
            path, models.vessel, models.prop, models.drv, models.conv, models.batt, models.mission,
            friction=friction,
        )
        sol = recover_solution(program, solve(program, settings), path, models, pass_no)
        logger.info(f"planner pass {pass_no} finished: {sol.status}")
        if not sol.is_optimal:
            break
        v = sol.v[:-1]
        friction = resistance_coefficient(np.maximum(v, 1e-3), models.vessel)

    if sol.is_optimal:
        sol = attrs.evolve(sol, tightness=check_tightness(sol, models, settings.tightness_tol))
        logger.info(
            f"plan: time {sol.time_total:.3f} s, fuel {sol.fuel_total:.3f} mg, "
            f"objective {sol.objective:.4f} ({time.perf_counter() - start:.2f} s total)"
        )
    return sol
