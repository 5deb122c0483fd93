"""Time-domain 3-DOF simulator: RK2 stepping, zig-zag harness and feedforward re-simulation.

States live in the earth frame ``(x, y, θ)`` with their rates. Body forces are mapped through
``R(θ)`` exactly as the planner's dynamics rows do, so a plan and its re-simulation share
sign conventions.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from typing import TYPE_CHECKING, Any, Literal

import attrs
import numpy as np
import pandas as pd
from attrs.validators import ge, gt, in_, instance_of
from numpy.typing import NDArray

from sailcone._errors import DomainError, IntegrationError
from sailcone._hydro import (
    HullForceSet,
    VesselModel,
    drag_force,
    physical_forces,
    rudder_angle_for_force,
    rudder_drag_physical,
    rudder_inflow,
    rudder_lift_coefficient,
)
from sailcone._propeller import PropellerModel, physical_thrust, shaft_speed_for_thrust

if TYPE_CHECKING:
    from sailcone._ocp import PlanSolution

logger = logging.getLogger(__name__)

DEFAULT_STEP = 0.01
HISTORY_COLUMNS = ("t", "x", "y", "theta", "theta_dot", "v", "rudder_deg", "n_p")


def _finite(_instance: object, attribute: attrs.Attribute, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{attribute.name} must be finite, got {value}")


def _state_field(default: float = 0.0) -> Any:  # noqa: ANN401
    return attrs.field(default=default, converter=float, validator=_finite)


@attrs.define(frozen=True)
class SimState:
    """Earth-frame pose and rates at time ``t``."""

    t: float = _state_field()
    x: float = _state_field()
    y: float = _state_field()
    theta: float = _state_field()
    xdot: float = _state_field()
    ydot: float = _state_field()
    thetadot: float = _state_field()

    @property
    def speed(self) -> float:
        return math.hypot(self.xdot, self.ydot)

    @property
    def surge(self) -> float:
        return self.xdot * math.cos(self.theta) + self.ydot * math.sin(self.theta)

    @property
    def sway(self) -> float:
        return -self.xdot * math.sin(self.theta) + self.ydot * math.cos(self.theta)

    @property
    def kinetic_energy(self) -> float:
        return 0.5 * (self.xdot**2 + self.ydot**2)

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.x, self.y, self.theta, self.xdot, self.ydot, self.thetadot])

    @classmethod
    def from_array(cls, t: float, values: NDArray[np.float64]) -> SimState:
        return cls(t, *(float(v) for v in values))

    @classmethod
    def straight(cls, speed: float, heading: float = 0.0) -> SimState:
        """Straight running along ``heading`` at ``speed``."""
        return cls(0.0, 0.0, 0.0, heading, speed * math.cos(heading), speed * math.sin(heading), 0.0)


@attrs.define(frozen=True)
class Controls:
    n_p: float = attrs.field(converter=float, validator=ge(0.0))
    rudder: float = attrs.field(default=0.0, converter=float, validator=_finite)


@attrs.define(frozen=True)
class RudderEvent:
    """Set the rudder to ``rudder`` once the trigger fires.

    A ``"time"`` trigger fires at ``t >= threshold``. A ``"heading"`` trigger fires when
    ``direction * (θ - threshold) >= 0``.
    """

    trigger: Literal["time", "heading"] = attrs.field(validator=in_(("time", "heading")))
    threshold: float = attrs.field(converter=float)
    rudder: float = attrs.field(converter=float)
    direction: int = attrs.field(default=1, validator=in_((-1, 1)))

    def fires(self, state: SimState) -> bool:
        if self.trigger == "time":
            return state.t >= self.threshold
        return self.direction * (state.theta - self.threshold) >= 0.0


@attrs.define(frozen=True, kw_only=True)
class ManeuverScript:
    events: tuple[RudderEvent, ...] = attrs.field(converter=tuple)
    n_p: float | Callable[[float], float]
    initial_speed: float = attrs.field(converter=float, validator=ge(0.0))

    def check(self, vessel: VesselModel) -> None:
        limit = vessel.rudder.omega_max
        for event in self.events:
            if abs(event.rudder) > limit + 1e-12:
                raise DomainError(f"rudder {math.degrees(event.rudder):.2f}° exceeds ±{math.degrees(limit):.2f}°")

    def shaft_speed(self, t: float) -> float:
        return float(self.n_p(t)) if callable(self.n_p) else float(self.n_p)

    @classmethod
    def zigzag(
        cls,
        angle: float,
        *,
        n_p: float | Callable[[float], float],
        initial_speed: float,
        heading: float | None = None,
        switches: int = 40,
    ) -> ManeuverScript:
        """Zig-zag with rudder ``angle`` switched at ``±heading`` (defaults to ``|angle|``).

        A negative ``angle`` runs the mirrored protocol, deflecting to starboard first.
        """
        sign = 1 if angle >= 0.0 else -1
        rudder = abs(angle)
        psi = abs(angle) if heading is None else abs(heading)
        events = [RudderEvent("time", 0.0, sign * rudder)]
        for k in range(switches):
            side = sign if k % 2 == 0 else -sign
            events.append(RudderEvent("heading", side * psi, -side * rudder, direction=side))
        return cls(events=events, n_p=n_p, initial_speed=initial_speed)


def state_derivative(
    state: SimState, controls: Controls, vessel: VesselModel, prop: PropellerModel
) -> tuple[NDArray[np.float64], HullForceSet]:
    """Rates of ``(x, y, θ, ẋ, ẏ, θ̇)`` and the force set they came from."""
    forces = physical_forces(state, controls, vessel, prop)
    surge = prop.k_p * forces.T_p - forces.F_D - forces.D_R
    sway = forces.F_H + forces.F_P - forces.F_R
    yaw = vessel.L_H * forces.F_H - vessel.L_P * forces.F_P + vessel.L_R * forces.F_R
    cos_t, sin_t = math.cos(state.theta), math.sin(state.theta)
    tau_x, tau_y, tau_yaw = vessel.tau
    rates = np.array(
        [
            state.xdot,
            state.ydot,
            state.thetadot,
            (cos_t * surge - sin_t * sway - tau_x) / vessel.m_eff,
            (sin_t * surge + cos_t * sway - tau_y) / vessel.m_eff,
            (yaw - tau_yaw) / vessel.I_eff,
        ]
    )
    if not np.all(np.isfinite(rates)):
        raise IntegrationError(f"non-finite derivative at t={state.t:.4f} s: state {state.as_array()}, rates {rates}")
    return rates, forces


def _rk2(
    state: SimState, controls: Controls, vessel: VesselModel, prop: PropellerModel, h: float
) -> tuple[SimState, bool, bool]:
    k1, f1 = state_derivative(state, controls, vessel, prop)
    y0 = state.as_array()
    mid = SimState.from_array(state.t + 0.5 * h, y0 + 0.5 * h * k1)
    k2, f2 = state_derivative(mid, controls, vessel, prop)
    new = SimState.from_array(state.t + h, y0 + h * k2)
    return new, f1.beta_clamped or f2.beta_clamped, f1.omega_clamped or f2.omega_clamped


def step_rk2(
    state: SimState, controls: Controls, vessel: VesselModel, prop: PropellerModel, h: float = DEFAULT_STEP
) -> SimState:
    """One explicit-midpoint step of length ``h``.

    .. code-block:: python

        from sailcone import Controls, SimState, step_rk2

        state = step_rk2(SimState.straight(1.5), Controls(n_p=20.0), vessel, prop, h=0.01)
    """
    if h <= 0.0:
        raise DomainError(f"step size must be positive, got {h}")
    new, beta_clamped, omega_clamped = _rk2(state, controls, vessel, prop, h)
    if beta_clamped:
        logger.warning(f"drift angle clamped to ±β_max at t={state.t:.3f} s")
    if omega_clamped:
        logger.warning(f"rudder angle clamped to ±ω_max at t={state.t:.3f} s")
    return new


def integrate(
    state: SimState,
    controls: Controls | Callable[[SimState], Controls],
    vessel: VesselModel,
    prop: PropellerModel,
    *,
    h: float = DEFAULT_STEP,
    t_end: float,
) -> list[SimState]:
    """States from ``state`` to ``state.t + t_end`` in ``round(t_end / h)`` steps."""
    if h <= 0.0:
        raise DomainError(f"step size must be positive, got {h}")
    policy = controls if callable(controls) else (lambda _state: controls)
    states = [state]
    beta_hits = omega_hits = 0
    for _ in range(round(t_end / h)):
        state, beta_clamped, omega_clamped = _rk2(state, policy(state), vessel, prop, h)
        beta_hits += beta_clamped
        omega_hits += omega_clamped
        states.append(state)
    if beta_hits or omega_hits:
        logger.warning(f"clamped drift angle on {beta_hits} and rudder angle on {omega_hits} of {len(states) - 1} steps")
    return states


def steady_shaft_speed(v: float, vessel: VesselModel, prop: PropellerModel) -> float:
    """Shaft speed at which ``k_p T_p`` balances straight-running drag at ``v``."""
    drag = float(drag_force(v, 0.0, vessel)) + vessel.tau[0]
    return float(shaft_speed_for_thrust(max(drag, 0.0) / prop.k_p, prop.wake * v, prop))


def history_frame(states: list[SimState], rudder: list[float], n_p: list[float]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "t": [s.t for s in states],
            "x": [s.x for s in states],
            "y": [s.y for s in states],
            "theta": [s.theta for s in states],
            "theta_dot": [s.thetadot for s in states],
            "v": [s.speed for s in states],
            "rudder_deg": np.degrees(rudder),
            "n_p": n_p,
        },
        columns=list(HISTORY_COLUMNS),
    )


def run_maneuver(
    script: ManeuverScript,
    vessel: VesselModel,
    prop: PropellerModel,
    *,
    h: float = DEFAULT_STEP,
    t_end: float = 60.0,
) -> pd.DataFrame:
    """Execute a rudder script from straight running and return its time history."""
    script.check(vessel)
    if h <= 0.0:
        raise DomainError(f"step size must be positive, got {h}")
    pending = list(script.events)
    rudder = 0.0
    state = SimState.straight(script.initial_speed)
    states, rudders, shafts = [], [], []
    beta_hits = omega_hits = 0
    steps = round(t_end / h)
    for k in range(steps + 1):
        if pending and pending[0].fires(state):
            rudder = pending.pop(0).rudder
            logger.debug(f"rudder to {math.degrees(rudder):.1f}° at t={state.t:.2f} s")
        n_p = script.shaft_speed(state.t)
        states.append(state)
        rudders.append(rudder)
        shafts.append(n_p)
        if k == steps:
            break
        state, beta_clamped, omega_clamped = _rk2(state, Controls(n_p, rudder), vessel, prop, h)
        beta_hits += beta_clamped
        omega_hits += omega_clamped
    if beta_hits or omega_hits:
        logger.warning(f"clamped drift angle on {beta_hits} and rudder angle on {omega_hits} steps")
    return history_frame(states, rudders, shafts)


def run_zigzag(  # noqa: PLR0913
    angle: float,
    vessel: VesselModel,
    prop: PropellerModel,
    *,
    h: float = DEFAULT_STEP,
    t_end: float = 60.0,
    initial_speed: float = 1.5,
    n_p: float | None = None,
) -> pd.DataFrame:
    """``angle``/``angle`` zig-zag from steady straight running.

    The shaft speed defaults to the straight-running balance at ``initial_speed`` and is
    held for the whole run.

    .. code-block:: python

        import math

        from sailcone import run_zigzag

        history = run_zigzag(math.radians(20), vessel, prop, t_end=80.0)
        history[["t", "theta", "rudder_deg"]]
    """
    shaft = steady_shaft_speed(initial_speed, vessel, prop) if n_p is None else n_p
    script = ManeuverScript.zigzag(angle, n_p=shaft, initial_speed=initial_speed)
    logger.info(f"zig-zag {math.degrees(angle):.1f}° at {initial_speed} m/s, n_p={shaft:.3f} rev/s")
    return run_maneuver(script, vessel, prop, h=h, t_end=t_end)


@attrs.define(frozen=True)
class ZigzagMetrics:
    first_overshoot: float
    second_overshoot: float
    period: float
    switches: int


def zigzag_metrics(history: pd.DataFrame, angle: float) -> ZigzagMetrics:
    """Overshoot angles (rad) past the switching heading and the steady oscillation period (s).

    Overshoots are NaN when the run stopped before the matching rudder switch; the period
    averages the last full cycles.
    """
    sign = 1.0 if angle >= 0.0 else -1.0
    psi = abs(angle)
    theta = sign * history["theta"].to_numpy()
    t = history["t"].to_numpy()
    rudder = history["rudder_deg"].to_numpy()
    switches = np.flatnonzero(np.diff(rudder) != 0.0) + 1

    def overshoot(k: int, side: float) -> float:
        if len(switches) <= k + 1:
            return math.nan
        window = theta[switches[k] : switches[k + 1] + 1]
        return float(np.max(side * window) - psi)

    period = math.nan
    if len(switches) >= 3:  # noqa: PLR2004
        cycles = t[switches[2:]] - t[switches[:-2]]
        tail = cycles[len(cycles) // 2 :]
        period = float(np.mean(tail))
    return ZigzagMetrics(overshoot(0, 1.0), overshoot(1, -1.0), period, len(switches))


@attrs.define(frozen=True)
class ResimResult:
    """Simulated versus planned speed at the path nodes."""

    sigma: NDArray[np.float64]
    t: NDArray[np.float64]
    v_sim: NDArray[np.float64]
    v_plan: NDArray[np.float64]
    rudder: NDArray[np.float64]
    stalled: NDArray[np.bool_]
    n_p_scale: float = attrs.field(default=1.0, validator=[instance_of(float), gt(0.0)])

    @property
    def relative_deviation(self) -> NDArray[np.float64]:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.v_sim - self.v_plan) / self.v_plan

    @property
    def rms_deviation(self) -> float:
        """RMS relative deviation over nodes ``1..N`` with a positive planned speed."""
        rel = self.relative_deviation[1:]
        mask = np.isfinite(rel) & (self.v_plan[1:] > 0.0)
        return float(np.sqrt(np.mean(rel[mask] ** 2))) if np.any(mask) else math.nan

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "sigma": self.sigma,
                "t": self.t,
                "v_sim": self.v_sim,
                "v_plan": self.v_plan,
                "rel_dev": self.relative_deviation,
                "rudder_deg": np.degrees(np.append(self.rudder, np.nan)),
            }
        )


def resimulate_plan(  # noqa: C901, PLR0915
    sol: PlanSolution,
    *,
    h: float = DEFAULT_STEP,
    n_p_scale: float = 1.0,
    time_factor: float = 3.0,
) -> ResimResult:
    """Drive the along-path surge equation with the plan's controls held per interval.

    Lateral and yaw motion follow the path; the plan's shaft speed (times ``n_p_scale``),
    drift force and rudder force are held constant over ``[σ_i, σ_{i+1})``. Rudder forces are
    turned into angles at the simulated inflow and flagged when they would stall.

    .. code-block:: python

        from sailcone import resimulate_plan

        resimulate_plan(solution).rms_deviation  # below 0.01 on the baseline
    """
    if h <= 0.0:
        raise DomainError(f"step size must be positive, got {h}")
    path, vessel, prop = sol.path, sol.models.vessel, sol.models.prop
    n = path.n_intervals
    ds = path.d_sigma
    n_p = sol.n_p * n_p_scale
    tangent = np.column_stack([path.s1p, path.s2p]) / np.sqrt(path.sp12)[:, None]
    tau_along = tangent[:-1] @ np.asarray(vessel.tau[:2])
    rudder = np.zeros(n)
    stalled = np.zeros(n, dtype=bool)

    def node(sigma: float) -> int:
        return min(int(sigma / ds), n - 1)

    def accel(sigma: float, v: float) -> float:
        i = node(sigma)
        v_a = prop.wake * v
        T_p = float(physical_thrust(n_p[i], v_a, prop))  # noqa: N806
        c_l = sol.F_H[i] / (0.5 * vessel.rho * vessel.S * v**2)
        f_d = float(drag_force(v, c_l, vessel))
        inflow = max(float(rudder_inflow(T_p, v**2, 1.0, prop)), 0.0)
        omega, clamped = rudder_angle_for_force(float(sol.F_R[i]), inflow, vessel)
        rudder[i], stalled[i] = omega, stalled[i] or clamped
        c_k = float(rudder_lift_coefficient(omega, vessel.rudder))
        d_r = float(rudder_drag_physical(c_k, vessel.rudder.k_tm**2 * inflow, vessel))
        return (prop.k_p * T_p - f_d - d_r - tau_along[i]) / vessel.m_eff

    def rates(sigma: float, v: float) -> tuple[float, float]:
        sp = float(np.interp(sigma, path.sigma, path.sp12))
        return v / math.sqrt(sp), accel(sigma, v)

    t, sigma, v = 0.0, 0.0, float(sol.v[0])
    if v <= 0.0:
        raise IntegrationError("re-simulation needs a positive initial speed")
    t_hist, s_hist, v_hist = [t], [sigma], [v]
    t_max = time_factor * sol.time_total + 10.0
    while sigma < 1.0 and t < t_max:
        d1 = rates(sigma, v)
        d2 = rates(min(sigma + 0.5 * h * d1[0], 1.0), v + 0.5 * h * d1[1])
        sigma, v, t = sigma + h * d2[0], v + h * d2[1], t + h
        if not (math.isfinite(sigma) and math.isfinite(v)):
            raise IntegrationError(f"non-finite re-simulation state at t={t:.3f} s")
        t_hist.append(t)
        s_hist.append(sigma)
        v_hist.append(v)
        if v <= 0.0:
            logger.warning(f"re-simulated vessel stopped at σ={sigma:.4f}, t={t:.2f} s")
            break
    if sigma < 1.0 and v > 0.0:
        logger.warning(f"re-simulation reached σ={sigma:.4f} only within {t_max:.1f} s")

    s_arr = np.asarray(s_hist)
    reached = path.sigma <= s_arr[-1]
    v_sim = np.full(n + 1, np.nan)
    t_sim = np.full(n + 1, np.nan)
    v_sim[reached] = np.interp(path.sigma[reached], s_arr, np.asarray(v_hist))
    t_sim[reached] = np.interp(path.sigma[reached], s_arr, np.asarray(t_hist))
    if np.any(stalled):
        logger.warning(f"rudder force needs more than ω_max on {int(stalled.sum())} intervals")
    result = ResimResult(path.sigma, t_sim, v_sim, sol.v, rudder, stalled, float(n_p_scale))
    logger.info(f"re-simulation with n_p x{n_p_scale}: RMS relative speed deviation {result.rms_deviation:.3e}")
    return result
