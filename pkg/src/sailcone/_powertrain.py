from __future__ import annotations

import logging
import math

import attrs
import numpy as np
from attrs.validators import ge, gt, in_, instance_of, le
from numpy.typing import ArrayLike, NDArray

from sailcone._hydro import VesselModel, drag_force, quad_over_lin
from sailcone._mission import Mission
from sailcone._propeller import PropellerModel, physical_torque, shaft_speed_for_thrust

logger = logging.getLogger(__name__)

WH = 3600.0


def _efficiency() -> list:
    return [gt(0.0), le(1.0)]


@attrs.define(frozen=True, kw_only=True)
class DrivetrainModel:
    """Electric machine, inverter and gearbox of one propeller. Shaft speeds in rev/s.

    ``i_g`` is the machine-to-propeller speed ratio, ``n_EM = i_g n_p``.
    """

    i_g: float = attrs.field(converter=float, validator=gt(0.0))
    n_EM_max: float = attrs.field(converter=float, validator=gt(0.0))
    Q_EM_max: float = attrs.field(converter=float, validator=gt(0.0))
    P_EM_max: float = attrs.field(converter=float, validator=gt(0.0))
    v_ref: float = attrs.field(converter=float, validator=gt(0.0))
    eta_EM: float = attrs.field(default=1.0, converter=float, validator=_efficiency())
    eta_g: float = attrs.field(default=1.0, converter=float, validator=_efficiency())
    eta_inv: float = attrs.field(default=1.0, converter=float, validator=_efficiency())

    @property
    def eta_tilde(self) -> float:
        return self.eta_EM * self.eta_g * self.eta_inv

    @property
    def ntil_max(self) -> float:
        return (self.n_EM_max / self.i_g) ** 2

    @property
    def Q_p_max(self) -> float:  # noqa: N802
        return self.Q_EM_max * self.eta_g * self.i_g


@attrs.define(frozen=True, kw_only=True)
class ConverterModel:
    """Identical energy converters with affine fuel map ``a_c0 + a_c1 P_c`` (mg/s)."""

    a_c0: float = attrs.field(converter=float, validator=ge(0.0))
    a_c1: float = attrs.field(converter=float, validator=gt(0.0))
    P_c_max: float = attrs.field(converter=float, validator=gt(0.0))
    K: int = attrs.field(default=1, validator=[instance_of(int), ge(1)])

    def rescaled(self, P_c_max: float) -> ConverterModel:  # noqa: N803
        """Converter of another rating with the same efficiency at rated power."""
        ratio = P_c_max / self.P_c_max
        return attrs.evolve(self, a_c0=self.a_c0 * ratio, P_c_max=P_c_max)


@attrs.define(frozen=True, kw_only=True)
class BatteryModel:
    """Equivalent-circuit battery with energy deviation bounds ``dE_min <= ΔE <= dE_max`` (J)."""

    U0: float = attrs.field(converter=float, validator=gt(0.0))
    R_i: float = attrs.field(converter=float, validator=gt(0.0))
    E0: float = attrs.field(converter=float, validator=ge(0.0))
    dE_min: float = attrs.field(converter=float, validator=le(0.0))
    dE_max: float = attrs.field(converter=float, validator=ge(0.0))
    P_cha_max: float = attrs.field(converter=float, validator=ge(0.0))
    P_dis_max: float = attrs.field(converter=float, validator=ge(0.0))
    eta_dcdc: float = attrs.field(default=1.0, converter=float, validator=_efficiency())
    soc_sustaining: bool = attrs.field(default=True, validator=instance_of(bool))
    E_max: float | None = attrs.field(default=None)
    soc_rate_form: str = attrs.field(default="energy", validator=in_(("energy", "path_scaled")))

    @classmethod
    def from_capacity(  # noqa: PLR0913
        cls,
        *,
        E_max_Wh: float,  # noqa: N803
        E0_Wh: float,  # noqa: N803
        soc_min: float = 0.0,
        soc_max: float = 1.0,
        **kwargs: float | bool | str,
    ) -> BatteryModel:
        """Build from a capacity and SOC window given in Wh and fractions."""
        if E0_Wh > E_max_Wh:
            raise ValueError(f"initial energy {E0_Wh} Wh exceeds capacity {E_max_Wh} Wh")
        if not 0.0 <= soc_min <= soc_max <= 1.0:
            raise ValueError(f"SOC window [{soc_min}, {soc_max}] must lie in [0, 1]")
        e_max = E_max_Wh * WH
        e0 = E0_Wh * WH
        return cls(
            E0=e0, dE_min=soc_min * e_max - e0, dE_max=soc_max * e_max - e0, E_max=e_max, **kwargs
        )

    def soc(self, dE: ArrayLike) -> NDArray[np.float64]:  # noqa: N803
        if self.E_max is None:
            return np.full(np.shape(dE), np.nan)
        return (self.E0 + np.asarray(dE, dtype=float)) / self.E_max


def taylor_power_bound(
    P_max: float,  # noqa: N803
    b: ArrayLike,
    sp12: ArrayLike,
    v_ref: float,
) -> NDArray[np.float64]:
    """Tangent of ``P_max / √b`` at ``s'12 b = v_ref²``: ``(P/2)(√s'12/v_r)(3 − s'12 b/v_r²)``."""
    b, sp12 = np.asarray(b, dtype=float), np.asarray(sp12, dtype=float)
    return 0.5 * P_max * np.sqrt(sp12) / v_ref * (3.0 - sp12 * b / v_ref**2)


@attrs.define(frozen=True)
class MachineLimits:
    """``F_EM`` and constraint residuals; a residual ``<= 0`` means the limit holds."""

    F_EM: NDArray[np.float64]
    speed: NDArray[np.float64]
    torque: NDArray[np.float64]
    power: NDArray[np.float64]


def em_force_and_limits(  # noqa: PLR0913
    F_dEp: ArrayLike,  # noqa: N803
    b: ArrayLike,
    ntil: ArrayLike,
    Q_p: ArrayLike,  # noqa: N803
    drv: DrivetrainModel,
    sp12: ArrayLike,
) -> MachineLimits:
    f_em = np.asarray(F_dEp, dtype=float) / drv.eta_tilde
    return MachineLimits(
        F_EM=f_em,
        speed=np.asarray(ntil, dtype=float) - drv.ntil_max,
        torque=np.asarray(Q_p, dtype=float) - drv.Q_p_max,
        power=f_em - taylor_power_bound(drv.P_EM_max, b, sp12, drv.v_ref),
    )


def converter_force(F_c: ArrayLike, y_t: ArrayLike, conv: ConverterModel) -> NDArray[np.float64]:  # noqa: N803
    """Internal converter force ``a_c0 y_t + (a_c1 − 1) F_c``."""
    return conv.a_c0 * np.asarray(y_t, dtype=float) + (conv.a_c1 - 1.0) * np.asarray(
        F_c, dtype=float
    )


def converter_fuel(
    F_c: ArrayLike,  # noqa: N803
    y_t: ArrayLike,
    k_c: ArrayLike,
    conv: ConverterModel,
) -> NDArray[np.float64]:
    """Fuel per unit σ ``k_c (a_c0 y_t + a_c1 F_c)`` in mg."""
    k = np.asarray(k_c, dtype=float)
    return k * (conv.a_c0 * np.asarray(y_t, dtype=float) + conv.a_c1 * np.asarray(F_c, dtype=float))


def battery_loss_epigraph(
    F_bat: ArrayLike,  # noqa: N803
    y_t: ArrayLike,
    batt: BatteryModel,
) -> NDArray[np.float64]:
    """Lower bound ``R_i/U0² · F_bat²/y_t`` on the dissipated fictive force."""
    return batt.R_i / batt.U0**2 * quad_over_lin(F_bat, y_t, "battery loss epigraph")


def energy_balance_residual(  # noqa: PLR0913
    F_dEp: ArrayLike,  # noqa: N803
    y_t: ArrayLike,
    F_batd: ArrayLike,  # noqa: N803
    F_c: ArrayLike,  # noqa: N803
    F_bat: ArrayLike,  # noqa: N803
    k_c: ArrayLike,
    *,
    prop: PropellerModel,
    drv: DrivetrainModel,
    batt: BatteryModel,
    P_aux: float,  # noqa: N803
) -> NDArray[np.float64]:
    """Demand minus supply; nonpositive when the relaxed balance holds, zero when tight."""
    F_dEp, y_t, F_batd, F_c, F_bat, k_c = (  # noqa: N806
        np.asarray(x, dtype=float) for x in (F_dEp, y_t, F_batd, F_c, F_bat, k_c)
    )
    demand = prop.k_p * F_dEp / drv.eta_tilde + P_aux * y_t + F_batd
    return demand - (k_c * F_c + batt.eta_dcdc * F_bat)


def soc_rate_scale(sp12: ArrayLike, batt: BatteryModel) -> NDArray[np.float64]:
    sp12 = np.asarray(sp12, dtype=float)
    if batt.soc_rate_form == "path_scaled":
        return np.sqrt(sp12)
    return np.ones_like(sp12)


def soc_trajectory(
    F_bat: ArrayLike,  # noqa: N803
    sp12: ArrayLike,
    d_sigma: float,
    batt: BatteryModel,
) -> NDArray[np.float64]:
    """Forward-difference battery energy deviation, one more entry than ``F_bat``.

    .. code-block:: python

        from sailcone import soc_trajectory

        soc_trajectory(np.full(10, 2.0), np.ones(10), 0.1, batt)[-1]  # -2.0
    """
    f = np.asarray(F_bat, dtype=float)
    rate = f * soc_rate_scale(np.asarray(sp12, dtype=float)[: f.size], batt)
    return np.concatenate([[0.0], -np.cumsum(rate) * d_sigma])


def battery_condition(
    F_bat: ArrayLike,  # noqa: N803
    b: ArrayLike,
    batt: BatteryModel,
    P_aux: float,  # noqa: N803
) -> NDArray[np.bool_]:
    """Per node, whether the dissipated battery power stays at or below ``P_aux``."""
    p_batt = np.asarray(F_bat, dtype=float) * np.sqrt(np.maximum(np.asarray(b, dtype=float), 0.0))
    return batt.R_i / batt.U0**2 * p_batt**2 <= P_aux


def steady_state_power(
    v: float,
    vessel: VesselModel,
    prop: PropellerModel,
    drv: DrivetrainModel,
    P_aux: float,  # noqa: N803
) -> float:
    """Electrical demand of straight running at constant speed ``v`` (W)."""
    thrust_each = float(drag_force(v, 0.0, vessel)) / prop.k_p
    v_a = prop.wake * v
    n_p = float(shaft_speed_for_thrust(thrust_each, v_a, prop))
    shaft = 2.0 * math.pi * n_p * float(physical_torque(n_p, v_a, prop))
    return prop.k_p * shaft / drv.eta_tilde + P_aux


def converter_schedule(  # noqa: PLR0913
    sigma: ArrayLike,
    mission: Mission,
    conv: ConverterModel,
    vessel: VesselModel,
    prop: PropellerModel,
    drv: DrivetrainModel,
) -> NDArray[np.int_]:
    """Converters switched on per node.

    Zero on zero-emission legs; on speed-limited legs just enough converters for the
    steady demand at the limit; all ``K`` elsewhere.
    """
    s = np.asarray(sigma, dtype=float)
    k_c = np.full(s.shape, conv.K, dtype=int)
    caps = mission.speed_cap(s)
    for cap in np.unique(caps[np.isfinite(caps)]):
        demand = steady_state_power(float(cap), vessel, prop, drv, mission.P_aux)
        needed = min(conv.K, max(1, math.ceil(demand / conv.P_c_max)))
        k_c[caps == cap] = needed
        logger.debug(f"speed limit {cap} m/s needs {needed} converter(s) for {demand:.1f} W")
    k_c[mission.in_zero_emission(s)] = 0
    return k_c
