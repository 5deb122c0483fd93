"""Brute-force dynamic program over a speed grid, used to cross-check the convex planner.

Stages reuse the planner's discretization: forward differences, controls at the start node
of each interval, relaxations evaluated at equality and the same machine, converter and
battery limits. Only straight paths are supported, where the sway and yaw rows force
``F_H = F_R = 0``.
"""

from __future__ import annotations

import logging
import math

import attrs
import numpy as np
from numpy.typing import NDArray

from sailcone._errors import DomainError, OracleInfeasibleError
from sailcone._ocp import PlanModels, reference_friction
from sailcone._path import PathSamples, curvature
from sailcone._powertrain import converter_schedule, soc_rate_scale, taylor_power_bound
from sailcone._propeller import energy_input_epigraph, physical_torque, shaft_speed_for_thrust

logger = logging.getLogger(__name__)

STRAIGHT_TOL = 1e-9


def grid_points(base: int, level: int) -> int:
    """Nested grid sizes ``(base − 1)·2^level + 1``."""
    return (base - 1) * 2**level + 1


@attrs.define(frozen=True)
class DpResult:
    objective: float
    v: NDArray[np.float64]
    dE: NDArray[np.float64]
    time: float
    fuel: float
    points: int


def _stage_cost(  # noqa: PLR0913
    i: int,
    v_from: NDArray[np.float64],
    v_to: NDArray[np.float64],
    e_from: NDArray[np.float64],
    e_to: NDArray[np.float64],
    path: PathSamples,
    models: PlanModels,
    k_c: int,
    forced_off: bool,  # noqa: FBT001
    friction: float,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Cost and fuel of every transition, shaped ``(M_from, M_to, E_from, E_to)``."""
    vessel, prop, drv, conv, batt = models.vessel, models.prop, models.drv, models.conv, models.batt
    mission = models.mission
    ds = path.d_sigma
    sp, sp_next = path.sp12[i], path.sp12[i + 1]
    tangent = np.array([path.s1p[i], path.s2p[i]]) / math.sqrt(sp)
    along_sp = math.sqrt(sp)
    along_spp = float(tangent @ np.array([path.s1pp[i], path.s2pp[i]]))
    tau_along = float(tangent @ np.asarray(vessel.tau[:2]))

    b = (v_from**2 / sp)[:, None]
    b_next = (v_to**2 / sp_next)[None, :]
    accel = along_sp * (b_next - b) / (2.0 * ds) + along_spp * b
    drag = 0.5 * vessel.rho * friction * vessel.A_s * sp * b
    T_p = np.maximum(vessel.m_eff * accel + drag + tau_along, 0.0) / prop.k_p  # noqa: N806

    v_s = np.broadcast_to(np.sqrt(sp * b), T_p.shape)
    v_a = prop.wake * v_s
    n_p = shaft_speed_for_thrust(T_p, v_a, prop)
    ntil = n_p**2
    z = v_s * n_p
    bb = np.broadcast_to(b, T_p.shape)
    f_dep = energy_input_epigraph(bb, z, ntil, sp, prop)
    y_t = 1.0 / np.sqrt(bb)

    ok = (ntil <= drv.ntil_max) & (physical_torque(n_p, v_a, prop) <= drv.Q_p_max)
    ok &= f_dep / drv.eta_tilde <= taylor_power_bound(drv.P_EM_max, bb, sp, drv.v_ref)
    demand = prop.k_p * f_dep / drv.eta_tilde + mission.P_aux * y_t

    g = float(soc_rate_scale(np.array([sp]), batt)[0])
    f_bat = (e_from[:, None] - e_to[None, :]) / (g * ds)
    demand4 = demand[:, :, None, None]
    y4 = y_t[:, :, None, None]
    b4 = bb[:, :, None, None]
    f_batd = batt.R_i / batt.U0**2 * f_bat[None, None] ** 2 / y4
    need = demand4 + f_batd - batt.eta_dcdc * f_bat[None, None]

    ok4 = ok[:, :, None, None] & (f_bat[None, None] <= taylor_power_bound(batt.P_dis_max, b4, sp, drv.v_ref))
    ok4 &= -f_bat[None, None] <= taylor_power_bound(batt.P_cha_max, b4, sp, drv.v_ref)
    if forced_off or k_c == 0:
        f_c = np.zeros_like(need)
        ok4 &= need <= 1e-12
    else:
        f_c = np.maximum(need, 0.0) / k_c
        ok4 &= f_c <= taylor_power_bound(conv.P_c_max, b4, sp, drv.v_ref)

    fuel = ds * k_c * (conv.a_c0 * y4 + conv.a_c1 * f_c)
    cost = fuel + ds * mission.omega_T * y4
    return np.where(ok4, cost, np.inf), np.where(ok4, fuel, np.inf)


def dp_oracle(  # noqa: PLR0913, C901
    path: PathSamples,
    models: PlanModels,
    *,
    base: int = 200,
    level: int = 0,
    v_range: tuple[float, float] | None = None,
    energy_points: int = 1,
) -> DpResult:
    """Best objective over a nested speed grid (and optionally a battery-energy grid).

    ``energy_points == 1`` pins ``ΔE`` to zero. Raises ``OracleInfeasibleError`` when no grid
    trajectory meets the boundary conditions.

    .. code-block:: python

        from sailcone import dp_oracle

        dp_oracle(samples, models, base=200).objective
    """
    if np.max(np.abs(curvature(path))) > STRAIGHT_TOL:
        raise DomainError("the dynamic-programming oracle only supports straight paths")
    mission, batt = models.mission, models.batt
    n = path.n_intervals
    if mission.N != n:
        raise DomainError(f"mission has N={mission.N} but the path has {n} intervals")

    lo, hi = v_range or (0.25 * models.drv.v_ref, 2.5 * models.drv.v_ref)
    grid = np.unique(np.concatenate([np.linspace(lo, hi, grid_points(base, level)), [mission.v_init, mission.v_final]]))
    grid = grid[grid > 0.0] if mission.v_final > 0.0 else grid
    energy = np.unique(np.concatenate([np.linspace(batt.dE_min, batt.dE_max, energy_points), [0.0]])) if energy_points > 1 else np.zeros(1)
    m, e = len(grid), len(energy)
    caps = mission.speed_cap(path.sigma)
    sigma_c = path.sigma[:-1]
    k_c = converter_schedule(sigma_c, mission, models.conv, models.vessel, models.prop, models.drv)
    forced = (k_c == 0) | mission.in_battery_only(sigma_c)
    friction = reference_friction(path, models.vessel, models.drv, mission)

    start_v = int(np.flatnonzero(np.isclose(grid, mission.v_init))[0])
    zero_e = int(np.flatnonzero(energy == 0.0)[0])
    cost = np.full((m, e), np.inf)
    fuel = np.full((m, e), np.inf)
    cost[start_v, zero_e] = 0.0
    fuel[start_v, zero_e] = 0.0
    parents = []

    for i in range(n):
        allowed_from = grid > 0.0
        stage, stage_fuel = _stage_cost(
            i, grid[allowed_from], grid, energy, energy, path, models, int(k_c[i]), bool(forced[i]), float(friction[i])
        )
        full = np.full((m, m, e, e), np.inf)
        full_fuel = np.full((m, m, e, e), np.inf)
        full[allowed_from], full_fuel[allowed_from] = stage, stage_fuel
        reach = grid <= caps[i + 1] + 1e-12
        full[:, ~reach] = np.inf
        total = cost[:, None, :, None] + full
        flat = total.transpose(1, 3, 0, 2).reshape(m, e, m * e)
        best = np.argmin(flat, axis=2)
        new_cost = np.take_along_axis(flat, best[..., None], axis=2)[..., 0]
        from_v, from_e = np.unravel_index(best, (m, e))
        fuel = fuel[from_v, from_e] + full_fuel[from_v, np.arange(m)[:, None], from_e, np.arange(e)[None, :]]
        cost = new_cost
        parents.append((from_v, from_e))

    end_v = int(np.flatnonzero(np.isclose(grid, mission.v_final))[0])
    end_e = zero_e if batt.soc_sustaining else int(np.argmin(cost[end_v]))
    objective = float(cost[end_v, end_e])
    if not np.isfinite(objective):
        raise OracleInfeasibleError(f"no trajectory on the {m}-point grid meets the boundary conditions")

    v_idx, e_idx = np.empty(n + 1, dtype=int), np.empty(n + 1, dtype=int)
    v_idx[n], e_idx[n] = end_v, end_e
    for i in range(n - 1, -1, -1):
        from_v, from_e = parents[i]
        v_idx[i], e_idx[i] = from_v[v_idx[i + 1], e_idx[i + 1]], from_e[v_idx[i + 1], e_idx[i + 1]]

    v = grid[v_idx]
    b = v[:-1] ** 2 / path.sp12[:-1]
    time_total = float(np.sum(1.0 / np.sqrt(b)) * path.d_sigma)
    result = DpResult(objective, v, energy[e_idx], time_total, float(fuel[end_v, end_e]), m)
    logger.info(f"dp oracle on {m} speeds x {e} energies: objective {objective:.6g}")
    return result
