from __future__ import annotations

import logging
import math
import re
from pathlib import Path

import attrs
import numpy as np
import pandas as pd
from attrs.validators import ge, gt, in_, instance_of, lt
from danom import Result, Stream, safe
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq, lsq_linear

from sailcone._errors import ConfigurationError, FitError, InfeasibleDirectionError

logger = logging.getLogger(__name__)

N_FIT_POINTS = 101
_RELATIVE_FLOOR = 1e-9


@attrs.define(frozen=True, kw_only=True)
class PropellerModel:
    """Fixed-pitch propeller with convex poly2 open-water coefficients.

    ``K_T(J) = −a_T2 J² − a_T1 J + a_T0`` and ``K_Q`` alike. Shaft speeds are in rev/s.
    """

    D_p: float = attrs.field(converter=float, validator=gt(0.0))
    f_w: float = attrs.field(converter=float, validator=[ge(0.0), lt(1.0)])
    a_T0: float = attrs.field(converter=float, validator=gt(0.0))
    a_T2: float = attrs.field(converter=float, validator=ge(0.0))
    a_Q0: float = attrs.field(converter=float, validator=gt(0.0))
    a_Q2: float = attrs.field(converter=float, validator=ge(0.0))
    a_T1: float = attrs.field(default=0.0, converter=float, validator=ge(0.0))
    a_Q1: float = attrs.field(default=0.0, converter=float, validator=ge(0.0))
    k_p: int = attrs.field(default=1, validator=[instance_of(int), ge(1)])
    rho: float = attrs.field(default=997.0, converter=float, validator=gt(0.0))

    @property
    def is_reduced(self) -> bool:
        return self.a_T1 == 0.0 and self.a_Q1 == 0.0

    @property
    def wake(self) -> float:
        return 1.0 - self.f_w

    @property
    def a_tilde_T1(self) -> float:
        return self.a_T0 * self.rho * self.D_p**4

    @property
    def a_tilde_T2(self) -> float:
        return self.a_T1 * self.rho * self.D_p**3 * self.wake

    @property
    def a_tilde_T3(self) -> float:
        return self.a_T2 * self.rho * self.D_p**2 * self.wake**2

    @property
    def a_tilde_Q1(self) -> float:
        return self.a_Q0 * self.rho * self.D_p**5

    @property
    def a_tilde_Q2(self) -> float:
        return self.a_Q1 * self.rho * self.D_p**4 * self.wake

    @property
    def a_tilde_Q3(self) -> float:
        return self.a_Q2 * self.rho * self.D_p**3 * self.wake**2

    @property
    def k_dEp1(self) -> float:
        return 2.0 * math.pi * self.a_tilde_Q1

    @property
    def k_dEp2(self) -> float:
        return 2.0 * math.pi * self.a_tilde_Q2

    @property
    def k_dEp3(self) -> float:
        return 2.0 * math.pi * self.a_tilde_Q3

    def K_T(self, J: ArrayLike) -> NDArray[np.float64]:  # noqa: N802
        J = np.asarray(J, dtype=float)
        return -self.a_T2 * J**2 - self.a_T1 * J + self.a_T0

    def K_Q(self, J: ArrayLike) -> NDArray[np.float64]:  # noqa: N802
        J = np.asarray(J, dtype=float)
        return -self.a_Q2 * J**2 - self.a_Q1 * J + self.a_Q0


@attrs.define(frozen=True, kw_only=True)
class WageningenTerm:
    target: str = attrs.field(validator=in_(("T", "Q")))
    C: float = attrs.field(converter=float)
    S: float = attrs.field(converter=float)
    t: float = attrs.field(converter=float)
    u: float = attrs.field(converter=float)
    v: float = attrs.field(converter=float)


@attrs.define(frozen=True, kw_only=True)
class Geometry:
    Z: float = attrs.field(converter=float, validator=gt(0.0))
    AE_A0: float = attrs.field(converter=float, validator=gt(0.0))
    P_D: float = attrs.field(converter=float, validator=gt(0.0))


def _increasing_grid(_instance: object, _attribute: attrs.Attribute, value: NDArray) -> None:
    if value.ndim != 1 or value.size < 1:
        raise ValueError("J grid must be a non-empty vector")
    if np.any(np.diff(value) <= 0.0) or value[0] < 0.0:
        raise ValueError("J grid must be nonnegative and strictly increasing")


def _vector(value: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(value, dtype=float)


@attrs.define(frozen=True, eq=False, kw_only=True)
class OpenWaterCurve:
    """Sampled open-water diagram, optionally backed by Wageningen polynomial terms."""

    J: NDArray[np.float64] = attrs.field(converter=_vector, validator=_increasing_grid)
    K_T: NDArray[np.float64] = attrs.field(converter=_vector)
    K_Q: NDArray[np.float64] = attrs.field(converter=_vector)
    terms: tuple[WageningenTerm, ...] = attrs.field(default=(), converter=tuple)
    geometry: Geometry | None = None
    name: str = ""

    def __attrs_post_init__(self) -> None:
        if not (self.J.shape == self.K_T.shape == self.K_Q.shape):
            raise ValueError("J, K_T and K_Q must have the same length")

    @classmethod
    def from_wageningen(
        cls,
        terms: tuple[WageningenTerm, ...],
        geometry: Geometry,
        n_points: int = N_FIT_POINTS,
        name: str = "",
    ) -> OpenWaterCurve:
        """Tabulate the polynomial on ``[0, J_zero-thrust]``."""
        probe = cls(J=[0.0], K_T=[0.0], K_Q=[0.0], terms=terms, geometry=geometry)
        j_max = zero_thrust_advance(probe)
        grid = np.linspace(0.0, j_max, n_points)
        k_t, k_q = eval_wageningen(probe, grid)
        return cls(J=grid, K_T=k_t, K_Q=k_q, terms=terms, geometry=geometry, name=name)


def eval_wageningen(
    curve: OpenWaterCurve, J: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Evaluate ``Σ C J^S (P/D)^t (A_E/A_0)^u Z^v`` for thrust and torque.

    .. code-block:: python

        from sailcone import eval_wageningen

        k_t, k_q = eval_wageningen(curve, 0.5)
    """
    if not curve.terms or curve.geometry is None:
        raise ConfigurationError(f"curve {curve.name!r} carries no Wageningen term data")
    J = np.asarray(J, dtype=float)
    geo = curve.geometry
    k_t = np.zeros_like(J)
    k_q = np.zeros_like(J)
    for term in curve.terms:
        value = term.C * J**term.S * geo.P_D**term.t * geo.AE_A0**term.u * geo.Z**term.v
        if term.target == "T":
            k_t = k_t + value
        else:
            k_q = k_q + value
    return k_t, k_q


def zero_thrust_advance(curve: OpenWaterCurve, j_hi: float = 3.0) -> float:
    def k_t(j: float) -> float:
        return float(eval_wageningen(curve, j)[0])

    if k_t(0.0) <= 0.0:
        raise ConfigurationError(f"curve {curve.name!r} has no positive bollard thrust")
    grid = np.linspace(0.0, j_hi, 601)
    values = eval_wageningen(curve, grid)[0]
    crossing = np.flatnonzero(values <= 0.0)
    if crossing.size == 0:
        raise ConfigurationError(f"K_T of {curve.name!r} has no zero on [0, {j_hi}]")
    upper = grid[crossing[0]]
    return float(brentq(k_t, grid[crossing[0] - 1], upper)) if values[crossing[0]] < 0 else upper


_GEOMETRY_PATTERN = re.compile(r"(Z|AE_A0|P_D)\s*=\s*([-+0-9.eE]+)")


def read_wageningen_file(path: str | Path) -> tuple[OpenWaterCurve, ...]:
    """Read a term CSV ``target,C,S,t,u,v`` with one ``# Z=..; AE_A0=..; P_D=..`` line per propeller."""
    path = Path(path)
    geometries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.lstrip().startswith("#"):
            found = dict(_GEOMETRY_PATTERN.findall(line))
            if found:
                geometries.append(Geometry(**found))
    if not geometries:
        raise ConfigurationError(f"{path} has no geometry header line")

    table = pd.read_csv(path, comment="#", skipinitialspace=True)
    missing = {"target", "C", "S", "t", "u", "v"} - set(table.columns)
    if missing:
        raise ConfigurationError(f"{path} is missing term columns {sorted(missing)}")
    terms = tuple(
        WageningenTerm(target=str(row.target).strip().upper(), C=row.C, S=row.S, t=row.t, u=row.u, v=row.v)
        for row in table.itertuples(index=False)
    )
    return tuple(
        OpenWaterCurve.from_wageningen(
            terms, geo, name=f"Z{geo.Z:g}-AE{geo.AE_A0:g}-PD{geo.P_D:g}"
        )
        for geo in geometries
    )


def open_water_efficiency(J: ArrayLike, K_T: ArrayLike, K_Q: ArrayLike) -> NDArray[np.float64]:  # noqa: N803
    J, K_T, K_Q = (np.asarray(x, dtype=float) for x in (J, K_T, K_Q))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(K_Q > 0.0, K_T * J / (2.0 * math.pi * K_Q), np.nan)


def _avg_relative_error(fit: NDArray, reference: NDArray) -> float:
    scale = float(np.nanmax(np.abs(reference), initial=0.0))
    mask = np.isfinite(fit) & np.isfinite(reference) & (np.abs(reference) > _RELATIVE_FLOOR * max(scale, 1.0))
    if not mask.any():
        return 0.0
    return float(np.mean(np.abs(fit[mask] - reference[mask]) / np.abs(reference[mask])))


@attrs.define(frozen=True)
class FitReport:
    """Average relative errors of linear, poly2 and poly3 fits against the source curve."""

    name: str
    kt_linear: float
    kt_poly2: float
    kt_poly3: float
    kq_linear: float
    kq_poly2: float
    kq_poly3: float
    eta_linear: float
    eta_poly2: float
    eta_poly3: float
    eta_poly2_max: float

    def as_row(self) -> dict[str, float | str]:
        return attrs.asdict(self)


@attrs.define(frozen=True)
class OpenWaterFit:
    a_T0: float
    a_T1: float
    a_T2: float
    a_Q0: float
    a_Q1: float
    a_Q2: float
    report: FitReport

    def to_model(self, *, D_p: float, f_w: float, k_p: int = 1, rho: float = 997.0) -> PropellerModel:  # noqa: N803
        return PropellerModel(
            D_p=D_p,
            f_w=f_w,
            a_T0=self.a_T0,
            a_T1=self.a_T1,
            a_T2=self.a_T2,
            a_Q0=self.a_Q0,
            a_Q1=self.a_Q1,
            a_Q2=self.a_Q2,
            k_p=k_p,
            rho=rho,
        )


def _poly2_signed(
    J: NDArray, K: NDArray, weights: NDArray, *, constrain_linear_zero: bool, label: str
) -> tuple[float, float, float]:
    columns = [np.ones_like(J), -(J**2)] if constrain_linear_zero else [np.ones_like(J), -J, -(J**2)]
    design = np.column_stack(columns) * weights[:, None]
    result = lsq_linear(design, K * weights, bounds=(0.0, np.inf), method="bvls")
    coef = result.x
    a0, a1, a2 = (coef[0], 0.0, coef[1]) if constrain_linear_zero else tuple(coef)
    if not result.success or a0 <= 0.0:
        raise FitError(
            f"sign-constrained poly2 fit of {label} has no positive intercept",
            {"a0": float(a0), "a1": float(a1), "a2": float(a2), "cost": float(result.cost)},
        )
    return float(a0), float(a1), float(a2)


def _fit_weights(J: NDArray, J_design: float | None, width: float) -> NDArray:  # noqa: N803
    if J_design is None:
        return np.ones_like(J)
    return np.sqrt(np.exp(-0.5 * ((J - J_design) / width) ** 2))


def fit_poly2(
    curve: OpenWaterCurve,
    constrain_linear_zero: bool = False,  # noqa: FBT001, FBT002
    J_design: float | None = None,  # noqa: N803
    width: float = 0.15,
) -> OpenWaterFit:
    """Least-squares convex poly2 fit of ``K_T`` and ``K_Q`` with ``a0 > 0, a1 >= 0, a2 >= 0``.

    With ``J_design`` the residuals carry a Gaussian weight of standard deviation ``width``
    centred there. The report compares against unconstrained linear and cubic fits.

    .. code-block:: python

        from sailcone import OpenWaterCurve, fit_poly2

        J = np.linspace(0, 0.9, 101)
        curve = OpenWaterCurve(J=J, K_T=0.3 - 0.35 * J**2, K_Q=0.041 - 0.041 * J**2)
        fit = fit_poly2(curve)
        (fit.a_T0, fit.a_T1, fit.a_T2)  # (0.3, 0.0, 0.35)
    """
    J = curve.J
    if J.size < 3:  # noqa: PLR2004
        raise FitError(f"curve {curve.name!r} needs at least 3 grid points, got {J.size}")
    if curve.K_T[0] <= 0.0:
        raise FitError(f"curve {curve.name!r} has K_T(0) <= 0", {"K_T0": float(curve.K_T[0])})

    weights = _fit_weights(J, J_design, width)
    t0, t1, t2 = _poly2_signed(
        J, curve.K_T, weights, constrain_linear_zero=constrain_linear_zero, label="K_T"
    )
    q0, q1, q2 = _poly2_signed(
        J, curve.K_Q, weights, constrain_linear_zero=constrain_linear_zero, label="K_Q"
    )

    poly_weights = None if J_design is None else weights
    fits: dict[str, tuple[NDArray, NDArray]] = {
        "linear": tuple(
            np.polyval(np.polyfit(J, k, 1, w=poly_weights), J) for k in (curve.K_T, curve.K_Q)
        ),
        "poly2": (t0 - t1 * J - t2 * J**2, q0 - q1 * J - q2 * J**2),
        "poly3": tuple(
            np.polyval(np.polyfit(J, k, 3, w=poly_weights), J) for k in (curve.K_T, curve.K_Q)
        ),
    }
    eta_source = open_water_efficiency(J, curve.K_T, curve.K_Q)
    errors = {}
    for method, (k_t, k_q) in fits.items():
        errors[f"kt_{method}"] = _avg_relative_error(k_t, curve.K_T)
        errors[f"kq_{method}"] = _avg_relative_error(k_q, curve.K_Q)
        errors[f"eta_{method}"] = _avg_relative_error(
            open_water_efficiency(J, k_t, k_q), eta_source
        )
    eta_fit = open_water_efficiency(J, *fits["poly2"])
    eta_max = float(np.nanmax(eta_fit)) if np.any(np.isfinite(eta_fit)) else 0.0

    report = FitReport(name=curve.name, eta_poly2_max=eta_max, **errors)
    logger.info(
        f"fitted {curve.name or 'curve'}: K_T poly2 error {report.kt_poly2:.2%}, "
        f"linear {report.kt_linear:.2%}, poly3 {report.kt_poly3:.2%}"
    )
    return OpenWaterFit(a_T0=t0, a_T1=t1, a_T2=t2, a_Q0=q0, a_Q1=q1, a_Q2=q2, report=report)


@attrs.define(frozen=True)
class FitBatch:
    fits: tuple[OpenWaterFit, ...]
    failures: tuple[Result, ...]

    @property
    def share_poly2_below_5pct(self) -> float:
        if not self.fits:
            return 0.0
        return sum(f.report.kt_poly2 < 0.05 for f in self.fits) / len(self.fits)  # noqa: PLR2004

    @property
    def share_poly3_below_1pct(self) -> float:
        if not self.fits:
            return 0.0
        return sum(f.report.kt_poly3 < 0.01 for f in self.fits) / len(self.fits)  # noqa: PLR2004


def fit_coefficient_file(
    path: str | Path,
    workers: int = 4,
    constrain_linear_zero: bool = False,  # noqa: FBT001, FBT002
    J_design: float | None = None,  # noqa: N803
) -> FitBatch:
    """Fit every propeller of a Wageningen coefficient file, one worker thread per batch."""
    curves = read_wageningen_file(path)
    results = (
        Stream.from_iterable(curves)
        .map(safe(fit_poly2), constrain_linear_zero=constrain_linear_zero, J_design=J_design)
        .par_collect(workers, use_threads=True)
    )
    oks, errs = Stream.from_iterable(results).partition(Result.result_is_ok)
    for err in errs.collect():
        logger.warning(f"propeller fit failed: {err.error}")
    return FitBatch(fits=oks.map(Result.result_unwrap).collect(), failures=errs.collect())


def thrust(
    b: ArrayLike, z: ArrayLike, ntil: ArrayLike, sp12: ArrayLike, prop: PropellerModel
) -> NDArray[np.float64]:
    """Affine thrust ``T_p = −ã_T3 s'12 b − ã_T2 z + ã_T1 ñ`` of one propeller."""
    b, z, ntil, sp12 = (np.asarray(x, dtype=float) for x in (b, z, ntil, sp12))
    return -prop.a_tilde_T3 * sp12 * b - prop.a_tilde_T2 * z + prop.a_tilde_T1 * ntil


def torque(
    b: ArrayLike, z: ArrayLike, ntil: ArrayLike, sp12: ArrayLike, prop: PropellerModel
) -> NDArray[np.float64]:
    b, z, ntil, sp12 = (np.asarray(x, dtype=float) for x in (b, z, ntil, sp12))
    return -prop.a_tilde_Q3 * sp12 * b - prop.a_tilde_Q2 * z + prop.a_tilde_Q1 * ntil


def _ratio(num: NDArray, den: NDArray, what: str) -> NDArray[np.float64]:
    zero = den <= 0.0
    if np.any(zero & (np.abs(num) > 0.0)):
        raise InfeasibleDirectionError(f"{what}: zero denominator with nonzero numerator")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(zero, 0.0, num / np.where(zero, 1.0, den))


def energy_input_epigraph(
    b: ArrayLike, z: ArrayLike, ntil: ArrayLike, sp12: ArrayLike, prop: PropellerModel
) -> NDArray[np.float64]:
    """Convex lower bound on the propeller input fictive force ``F_dEp`` (J per unit σ).

    Full model: ``√s'12 (−k3 z − k2 ñ + k1 ñ²/z)``. The reduced model eliminates ``z`` at its
    tight value ``√(s'12 b ñ)``.
    """
    b, z, ntil, sp12 = (np.asarray(x, dtype=float) for x in (b, z, ntil, sp12))
    root = np.sqrt(sp12)
    if prop.is_reduced:
        g = np.sqrt(ntil * sp12 * b)
        return (
            root
            * 2.0
            * math.pi
            * prop.rho
            * (
                prop.a_Q0 * prop.D_p**5 * _ratio(ntil**2, g, "reduced energy epigraph")
                - prop.a_Q2 * prop.wake**2 * prop.D_p**3 * g
            )
        )
    return root * (
        -prop.k_dEp3 * z
        - prop.k_dEp2 * ntil
        + prop.k_dEp1 * _ratio(ntil**2, z, "energy epigraph")
    )


@attrs.define(frozen=True)
class TheoremCondition:
    vacuous: bool
    holds: bool
    margin: float


def theorem_condition(prop: PropellerModel) -> TheoremCondition:
    """Propeller coefficient condition under which the ``z`` relaxation is tight.

    ``1 < a_Q1 a_T0 / (a_Q0 a_T1) − a_Q2 a_T0² / (a_Q0 a_T1²)``; vacuous when ``a_T1 = 0``.
    """
    if prop.is_reduced or prop.a_T1 == 0.0:
        return TheoremCondition(vacuous=True, holds=True, margin=math.inf)
    value = prop.a_Q1 * prop.a_T0 / (prop.a_Q0 * prop.a_T1) - prop.a_Q2 * prop.a_T0**2 / (
        prop.a_Q0 * prop.a_T1**2
    )
    margin = value - 1.0
    if margin <= 0.0:
        logger.warning(f"propeller coefficient condition fails (margin {margin:.3g})")
    return TheoremCondition(vacuous=False, holds=margin > 0.0, margin=margin)


def physical_thrust(n_p: ArrayLike, v_a: ArrayLike, prop: PropellerModel) -> NDArray[np.float64]:
    """``ρ D⁴ K_T(J) n²`` expanded so it stays regular at ``n = 0``."""
    n, va = np.asarray(n_p, dtype=float), np.asarray(v_a, dtype=float)
    return prop.rho * (
        -prop.a_T2 * prop.D_p**2 * va**2 - prop.a_T1 * prop.D_p**3 * va * n + prop.a_T0 * prop.D_p**4 * n**2
    )


def physical_torque(n_p: ArrayLike, v_a: ArrayLike, prop: PropellerModel) -> NDArray[np.float64]:
    n, va = np.asarray(n_p, dtype=float), np.asarray(v_a, dtype=float)
    return prop.rho * (
        -prop.a_Q2 * prop.D_p**3 * va**2 - prop.a_Q1 * prop.D_p**4 * va * n + prop.a_Q0 * prop.D_p**5 * n**2
    )


def shaft_speed_for_thrust(T_p: ArrayLike, v_a: ArrayLike, prop: PropellerModel) -> NDArray[np.float64]:  # noqa: N803
    """Positive root ``n`` of ``physical_thrust(n, v_a) = T_p``."""
    T, va = np.asarray(T_p, dtype=float), np.asarray(v_a, dtype=float)
    a = prop.rho * prop.a_T0 * prop.D_p**4
    half_b = 0.5 * prop.rho * prop.a_T1 * prop.D_p**3 * va
    c = -prop.rho * prop.a_T2 * prop.D_p**2 * va**2 - T
    disc = np.maximum(half_b**2 - a * c, 0.0)
    return np.maximum((half_b + np.sqrt(disc)) / a, 0.0)
