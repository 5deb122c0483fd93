from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import attrs
import numpy as np
from attrs.validators import ge, gt, in_, instance_of, le
from numpy.typing import ArrayLike, NDArray

from sailcone._errors import DomainError, InfeasibleDirectionError
from sailcone._propeller import PropellerModel, physical_thrust

if TYPE_CHECKING:
    from sailcone._sim import Controls, SimState

logger = logging.getLogger(__name__)

STALL_ANGLE = math.radians(20.0)
RUDDER_DRAG_FACTOR = 1.1


def _zero_tau(value: ArrayLike | None) -> tuple[float, float, float]:
    if value is None:
        return (0.0, 0.0, 0.0)
    tau = tuple(float(x) for x in value)
    if len(tau) != 3:  # noqa: PLR2004
        raise ValueError(f"tau must have three components, got {len(tau)}")
    return tau


@attrs.define(frozen=True, kw_only=True)
class RudderModel:
    A_R: float = attrs.field(converter=float, validator=gt(0.0))
    b_R: float = attrs.field(converter=float, validator=gt(0.0))
    omega_max: float = attrs.field(
        default=STALL_ANGLE, converter=float, validator=[gt(0.0), le(STALL_ANGLE + 1e-12)]
    )
    k_tm: float = attrs.field(default=1.0, converter=float, validator=[gt(0.0), le(1.0)])
    drag_rho_power: int = attrs.field(default=2, validator=in_((1, 2)))

    @property
    def Lambda(self) -> float:  # noqa: N802
        return self.b_R**2 / self.A_R

    @property
    def lift_slope(self) -> float:
        lam = self.Lambda
        return 2.0 * math.pi * lam * (lam + 1.0) / (lam + 2.0) ** 2


@attrs.define(frozen=True, kw_only=True)
class VesselModel:
    """Hull, inertia and rudder parameters of the 3-DOF vessel model."""

    m: float = attrs.field(converter=float, validator=gt(0.0))
    k1: float = attrs.field(converter=float, validator=ge(0.0))
    k2: float = attrs.field(converter=float, validator=ge(0.0))
    Izz: float = attrs.field(converter=float, validator=gt(0.0))
    Iw: float = attrs.field(converter=float, validator=ge(0.0))
    L_H: float = attrs.field(converter=float, validator=gt(0.0))
    L_P: float = attrs.field(converter=float, validator=gt(0.0))
    L_R: float = attrs.field(converter=float, validator=gt(0.0))
    S: float = attrs.field(converter=float, validator=gt(0.0))
    a_L1: float = attrs.field(converter=float, validator=ge(0.0))
    beta_max: float = attrs.field(converter=float, validator=gt(0.0))
    C_R: float = attrs.field(converter=float, validator=ge(0.0))
    A_s: float = attrs.field(converter=float, validator=gt(0.0))
    Omega: float = attrs.field(converter=float, validator=gt(0.0))
    L: float = attrs.field(converter=float, validator=gt(0.0))
    T: float = attrs.field(converter=float, validator=gt(0.0))
    rudder: RudderModel = attrs.field(validator=instance_of(RudderModel))
    a_L0: float = attrs.field(default=0.0, converter=float)
    nu: float = attrs.field(default=1.0e-6, converter=float, validator=gt(0.0))
    rho: float = attrs.field(default=997.0, converter=float, validator=gt(0.0))
    tau: tuple[float, float, float] = attrs.field(default=None, converter=_zero_tau)
    x_T: float = attrs.field(
        default=attrs.Factory(lambda self: self.L / 2.0, takes_self=True),
        converter=float,
        validator=gt(0.0),
    )

    @property
    def C_L_max(self) -> float:  # noqa: N802
        return self.a_L0 + self.a_L1 * self.beta_max

    @property
    def m_eff(self) -> float:
        return self.m * (1.0 + self.k1)

    @property
    def I_eff(self) -> float:  # noqa: N802
        return self.Izz + self.k2 * self.Iw

    @property
    def mass_matrix(self) -> NDArray[np.float64]:
        return np.diag([self.m_eff, self.m_eff, self.I_eff])


@attrs.define(frozen=True)
class HullForceSet:
    """Vessel-frame forces (N). ``T_p`` is the thrust of a single propeller."""

    T_p: float
    F_D: float
    F_H: float
    F_P: float
    F_R: float
    D_R: float
    beta_clamped: bool = False
    omega_clamped: bool = False


def _arrays(*values: ArrayLike) -> tuple[NDArray[np.float64], ...]:
    return tuple(np.asarray(v, dtype=float) for v in values)


def quad_over_lin(num: ArrayLike, den: ArrayLike, what: str) -> NDArray[np.float64]:
    """``num² / den`` for ``den >= 0``; zero when both vanish."""
    num, den = _arrays(num, den)
    zero = den <= 0.0
    if np.any(zero & (num != 0.0)):
        raise InfeasibleDirectionError(f"{what}: zero denominator with nonzero numerator")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(zero, 0.0, num**2 / np.where(zero, 1.0, den))


def friction_coefficient(v_s: ArrayLike, vessel: VesselModel) -> NDArray[np.float64]:
    """ITTC-57 friction line ``C_F = 0.075 / (log10 Rn − 2)²``.

    .. code-block:: python

        from sailcone import friction_coefficient

        friction_coefficient(1.53, vessel)  # ~3.2e-3 at Rn ~ 6.1e6
    """
    (v,) = _arrays(v_s)
    if np.any(v <= 0.0):
        raise DomainError("friction coefficient needs a positive speed")
    log_rn = np.log10(v * vessel.L / vessel.nu)
    if np.any(log_rn - 2.0 <= 0.0):
        raise DomainError("ITTC-57 line is undefined for Rn <= 100")
    return 0.075 / (log_rn - 2.0) ** 2


def resistance_coefficient(v_s: ArrayLike, vessel: VesselModel) -> NDArray[np.float64]:
    """``C_F + C_R``, zero at rest."""
    (v,) = _arrays(v_s)
    moving = v > 0.0
    out = np.zeros_like(v)
    if np.any(moving):
        out[moving] = friction_coefficient(v[moving], vessel) + vessel.C_R
    return out


def drift_force_bound(b: ArrayLike, sp12: ArrayLike, vessel: VesselModel) -> NDArray[np.float64]:
    b, sp12 = _arrays(b, sp12)
    if np.any(b < 0.0):
        raise DomainError("b must be nonnegative")
    return 0.5 * vessel.rho * vessel.S * vessel.C_L_max * sp12 * b


def induced_drag_factor(vessel: VesselModel) -> float:
    return 2.0 * vessel.A_s / (vessel.rho * math.pi * vessel.Omega * vessel.S**2)


def drag_epigraph_terms(
    F_H: ArrayLike,  # noqa: N803
    b: ArrayLike,
    sp12: ArrayLike,
    vessel: VesselModel,
    coefficient: ArrayLike | None = None,
) -> NDArray[np.float64]:
    """Lower bound on ``F_D``: friction/residual drag affine in ``b`` plus induced drag.

    ``coefficient`` replaces ``C_F + C_R`` (one value per node); by default it follows the
    ITTC-57 line at ``v_s = √(s'12 b)``.
    """
    F_H, b, sp12 = _arrays(F_H, b, sp12)  # noqa: N806
    v2 = sp12 * b
    if coefficient is None:
        coefficient = resistance_coefficient(np.sqrt(np.maximum(v2, 0.0)), vessel)
    friction = 0.5 * vessel.rho * np.asarray(coefficient, dtype=float) * vessel.A_s * v2
    return friction + induced_drag_factor(vessel) * quad_over_lin(F_H, v2, "drag epigraph")


def drag_force(v_s: ArrayLike, C_L: ArrayLike, vessel: VesselModel) -> NDArray[np.float64]:  # noqa: N803
    """Physical hull drag ``½ ρ A_s v² (C_L²/(πΩ) + C_F + C_R)``."""
    v, c_l = _arrays(v_s, C_L)
    c_d = c_l**2 / (math.pi * vessel.Omega) + resistance_coefficient(v, vessel)
    return 0.5 * vessel.rho * vessel.A_s * c_d * v**2


def added_mass_per_length(vessel: VesselModel) -> float:
    return 0.5 * math.pi * vessel.rho * vessel.T**2


def yaw_damping_force(
    b: ArrayLike, sp12: ArrayLike, s3p: ArrayLike, vessel: VesselModel
) -> NDArray[np.float64]:
    """Slender-body yaw damping ``x_T m_a s3' √s'12 b``; linear in ``b``."""
    b, sp12, s3p = _arrays(b, sp12, s3p)
    return vessel.x_T * added_mass_per_length(vessel) * s3p * np.sqrt(sp12) * b


def disk_loading_area(prop: PropellerModel) -> float:
    return 0.5 * prop.rho * 0.25 * math.pi * prop.D_p**2


def rudder_inflow(
    T_p: ArrayLike,  # noqa: N803
    b: ArrayLike,
    sp12: ArrayLike,
    prop: PropellerModel,
) -> NDArray[np.float64]:
    """``(1 − f_w)² s'12 b + T_p / (½ ρ π/4 D_p²)``, the squared rudder inflow before ``k_tm²``."""
    T_p, b, sp12 = _arrays(T_p, b, sp12)  # noqa: N806
    return prop.wake**2 * sp12 * b + T_p / disk_loading_area(prop)


def rudder_lift_coefficient(omega: ArrayLike, rudder: RudderModel) -> NDArray[np.float64]:
    return rudder.lift_slope * np.sin(np.asarray(omega, dtype=float))


def rudder_force_bound(
    T_p: ArrayLike,  # noqa: N803
    b: ArrayLike,
    sp12: ArrayLike,
    vessel: VesselModel,
    prop: PropellerModel,
) -> NDArray[np.float64]:
    rudder = vessel.rudder
    c_k = float(rudder_lift_coefficient(rudder.omega_max, rudder))
    return 0.5 * vessel.rho * c_k * rudder.A_R * rudder.k_tm**2 * rudder_inflow(T_p, b, sp12, prop)


def rudder_drag_factor(vessel: VesselModel) -> float:
    """``2.2 / (A_R π Λ ρ^p k_tm²)`` with the configured power ``p`` of ``ρ``."""
    rudder = vessel.rudder
    return (
        2.0
        * RUDDER_DRAG_FACTOR
        / (rudder.A_R * math.pi * rudder.Lambda * vessel.rho**rudder.drag_rho_power * rudder.k_tm**2)
    )


def rudder_drag_epigraph(
    F_R: ArrayLike,  # noqa: N803
    T_p: ArrayLike,  # noqa: N803
    b: ArrayLike,
    sp12: ArrayLike,
    vessel: VesselModel,
    prop: PropellerModel,
) -> NDArray[np.float64]:
    inflow = rudder_inflow(T_p, b, sp12, prop)
    return rudder_drag_factor(vessel) * quad_over_lin(F_R, inflow, "rudder drag epigraph")


def rudder_drag_physical(
    C_K: ArrayLike,  # noqa: N803
    v_R_sq: ArrayLike,  # noqa: N803
    vessel: VesselModel,
) -> NDArray[np.float64]:
    c_k, v2 = _arrays(C_K, v_R_sq)
    rudder = vessel.rudder
    c_d = RUDDER_DRAG_FACTOR * c_k**2 / (math.pi * rudder.Lambda)
    return 0.5 * vessel.rho * c_d * rudder.A_R * v2


def rudder_angle_for_force(
    F_R: float,  # noqa: N803
    inflow_sq: float,
    vessel: VesselModel,
) -> tuple[float, bool]:
    """Rudder angle producing ``F_R`` at squared inflow ``inflow_sq`` (before ``k_tm²``).

    Returns the angle clamped to ``±omega_max`` and whether the clamp was needed.
    """
    rudder = vessel.rudder
    dynamic = 0.5 * vessel.rho * rudder.A_R * rudder.k_tm**2 * max(inflow_sq, 0.0)
    if dynamic <= 0.0:
        return 0.0, F_R != 0.0
    sin_omega = F_R / (dynamic * rudder.lift_slope)
    limit = math.sin(rudder.omega_max)
    if abs(sin_omega) > limit:
        return math.copysign(rudder.omega_max, sin_omega), True
    return math.asin(sin_omega), False


def physical_forces(
    state: SimState, controls: Controls, vessel: VesselModel, prop: PropellerModel
) -> HullForceSet:
    """Nonconvex time-domain force set for the simulator.

    The drift angle and rudder angle are clamped to their bounds; the returned flags report
    when that happened.
    """
    cos_t, sin_t = math.cos(state.theta), math.sin(state.theta)
    surge = state.xdot * cos_t + state.ydot * sin_t
    sway = -state.xdot * sin_t + state.ydot * cos_t
    v_s = math.hypot(state.xdot, state.ydot)

    beta = math.atan2(-sway, surge) if v_s > 0.0 else 0.0
    beta_clamped = abs(beta) > vessel.beta_max
    beta = max(-vessel.beta_max, min(vessel.beta_max, beta))
    c_l = vessel.a_L0 + vessel.a_L1 * beta if v_s > 0.0 else 0.0
    F_H = 0.5 * vessel.rho * vessel.S * c_l * v_s**2  # noqa: N806
    F_D = float(drag_force(v_s, c_l, vessel))  # noqa: N806
    F_P = vessel.x_T * added_mass_per_length(vessel) * v_s * state.thetadot  # noqa: N806

    v_a = prop.wake * surge
    T_p = float(physical_thrust(controls.n_p, v_a, prop))  # noqa: N806
    rudder = vessel.rudder
    omega_clamped = abs(controls.rudder) > rudder.omega_max
    omega = max(-rudder.omega_max, min(rudder.omega_max, controls.rudder))
    v_r_sq = rudder.k_tm**2 * max(v_a**2 + T_p / disk_loading_area(prop), 0.0)
    c_k = float(rudder_lift_coefficient(omega, rudder))
    F_R = 0.5 * vessel.rho * c_k * rudder.A_R * v_r_sq  # noqa: N806
    D_R = float(rudder_drag_physical(c_k, v_r_sq, vessel))  # noqa: N806

    return HullForceSet(
        T_p=T_p,
        F_D=F_D,
        F_H=F_H,
        F_P=F_P,
        F_R=F_R,
        D_R=D_R,
        beta_clamped=beta_clamped,
        omega_clamped=omega_clamped,
    )
