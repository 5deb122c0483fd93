from __future__ import annotations

import math
from contextlib import nullcontext

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sailcone import (
    ConfigurationError,
    FitError,
    InfeasibleDirectionError,
    OpenWaterCurve,
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
from tests.conftest import WAGENINGEN_SAMPLE, reference_propeller

SP12 = 1e4
J_GRID = np.linspace(0.0, 0.9, 101)


def full_propeller(**overrides):
    values = {"a_T0": 0.3, "a_T1": 0.2, "a_T2": 0.25, "a_Q0": 0.04, "a_Q1": 0.05, "a_Q2": 0.005}
    return reference_propeller(**(values | overrides))


def test_open_water_polynomials():
    prop = full_propeller()
    assert prop.K_T(0.5) == pytest.approx(0.3 - 0.2 * 0.5 - 0.25 * 0.25)
    assert prop.K_Q(0.5) == pytest.approx(0.04 - 0.05 * 0.5 - 0.005 * 0.25)
    assert not prop.is_reduced
    assert reference_propeller().is_reduced


def test_scaled_coefficients():
    prop = reference_propeller()
    assert prop.a_tilde_T1 == pytest.approx(0.3 * 997.0 * 0.173**4)
    assert prop.a_tilde_T3 == pytest.approx(0.35 * 997.0 * 0.173**2 * 0.8**2)
    assert prop.k_dEp1 == pytest.approx(2.0 * math.pi * 0.041 * 997.0 * 0.173**5)
    assert prop.a_tilde_T2 == 0.0


@pytest.mark.parametrize("prop", [pytest.param(reference_propeller(), id="reduced"), pytest.param(full_propeller(), id="full")])
@pytest.mark.parametrize("v", [0.6, 1.5])
def test_affine_thrust_and_torque_match_physical(prop, v):
    n = 14.0
    b = v**2 / SP12
    z = math.sqrt(SP12 * b * n**2)
    v_a = prop.wake * v
    assert thrust(b, z, n**2, SP12, prop) == pytest.approx(physical_thrust(n, v_a, prop))
    assert torque(b, z, n**2, SP12, prop) == pytest.approx(physical_torque(n, v_a, prop))


@pytest.mark.parametrize("prop", [pytest.param(reference_propeller(), id="reduced"), pytest.param(full_propeller(), id="full")])
def test_energy_input_is_shaft_power_over_root_b(prop):
    n, v = 16.0, 1.2
    b = v**2 / SP12
    z = math.sqrt(SP12 * b) * n
    q_p = float(physical_torque(n, prop.wake * v, prop))
    expected = 2.0 * math.pi * n * q_p / math.sqrt(b)
    assert energy_input_epigraph(b, z, n**2, SP12, prop) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize(
    ("z", "ntil", "expected_context"),
    [
        pytest.param(0.0, 0.0, nullcontext(), id="idle shaft"),
        pytest.param(0.0, 25.0, pytest.raises(InfeasibleDirectionError), id="zero z with turning shaft"),
    ],
)
def test_energy_input_zero_denominator(z, ntil, expected_context):
    with expected_context:
        assert energy_input_epigraph(1e-4, z, ntil, SP12, full_propeller()) == pytest.approx(0.0)


@given(
    t_p=st.floats(min_value=0.0, max_value=40.0, allow_nan=False),
    v_a=st.floats(min_value=0.0, max_value=3.0, allow_nan=False),
)
def test_shaft_speed_inverts_thrust(t_p, v_a):
    prop = full_propeller()
    n = float(shaft_speed_for_thrust(t_p, v_a, prop))
    assert n >= 0.0
    assert physical_thrust(n, v_a, prop) == pytest.approx(t_p, abs=1e-8 * max(1.0, t_p))


@pytest.mark.parametrize(
    ("overrides", "vacuous", "holds"),
    [
        pytest.param({"a_T1": 0.0, "a_Q1": 0.0}, True, True, id="reduced model"),
        pytest.param({}, False, True, id="strong linear torque term"),
        pytest.param({"a_Q1": 0.02, "a_Q2": 0.03}, False, False, id="weak linear torque term"),
    ],
)
def test_theorem_condition(overrides, vacuous, holds):
    condition = theorem_condition(full_propeller(**overrides))
    assert condition.vacuous is vacuous
    assert condition.holds is holds


def test_open_water_efficiency_nan_without_torque():
    eta = open_water_efficiency([0.2, 0.5], [0.2, 0.1], [0.02, 0.0])
    assert eta[0] == pytest.approx(0.2 * 0.2 / (2.0 * math.pi * 0.02))
    assert np.isnan(eta[1])


def test_read_wageningen_file():
    curves = read_wageningen_file(WAGENINGEN_SAMPLE)
    assert [c.geometry.P_D for c in curves] == [1.0, 1.2, 1.4]
    for curve in curves:
        assert curve.J[0] == 0.0
        assert curve.K_T[0] == pytest.approx(0.3 * curve.geometry.P_D)
        assert curve.K_T[-1] == pytest.approx(0.0, abs=1e-10)
        assert np.all(curve.K_Q > 0.0)
    assert curves[0].J[-1] < curves[2].J[-1]


def test_eval_wageningen_needs_terms():
    curve = OpenWaterCurve(J=J_GRID, K_T=0.3 - 0.35 * J_GRID**2, K_Q=0.041 - 0.041 * J_GRID**2)
    with pytest.raises(ConfigurationError):
        eval_wageningen(curve, 0.5)


@pytest.mark.parametrize(
    ("content", "match"),
    [
        pytest.param("target,C,S,t,u,v\nT,0.3,0,1,0,0\n", "geometry", id="no geometry header"),
        pytest.param("# Z=4; AE_A0=0.55; P_D=1.0\ntarget,C,S\nT,0.3,0\n", "missing", id="missing columns"),
    ],
)
def test_read_wageningen_file_errors(tmp_path, content, match):
    path = tmp_path / "terms.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigurationError, match=match):
        read_wageningen_file(path)


@pytest.mark.parametrize("constrain_linear_zero", [False, True])
def test_fit_recovers_exact_quadratic(constrain_linear_zero):
    curve = OpenWaterCurve(J=J_GRID, K_T=0.3 - 0.35 * J_GRID**2, K_Q=0.041 - 0.041 * J_GRID**2)
    fit = fit_poly2(curve, constrain_linear_zero=constrain_linear_zero)
    assert (fit.a_T0, fit.a_T1, fit.a_T2) == pytest.approx((0.3, 0.0, 0.35), abs=1e-9)
    assert (fit.a_Q0, fit.a_Q1, fit.a_Q2) == pytest.approx((0.041, 0.0, 0.041), abs=1e-9)
    assert fit.report.kt_poly2 < 1e-8
    model = fit.to_model(D_p=0.173, f_w=0.2, k_p=2)
    assert model.k_p == 2
    assert model.K_T(0.5) == pytest.approx(0.3 - 0.35 * 0.25)
    assert model.is_reduced or not constrain_linear_zero


@pytest.mark.parametrize(
    ("J", "K_T", "expected_context"),
    [
        pytest.param([0.0, 0.5], [0.3, 0.1], pytest.raises(FitError), id="two points"),
        pytest.param([0.0, 0.3, 0.6], [-0.1, -0.2, -0.3], pytest.raises(FitError), id="no bollard thrust"),
        pytest.param([0.0, 0.3, 0.6], [0.3, 0.25, 0.15], nullcontext(), id="three points"),
    ],
)
def test_fit_input_checks(J, K_T, expected_context):
    curve = OpenWaterCurve(J=J, K_T=K_T, K_Q=[0.04, 0.035, 0.025][: len(J)])
    with expected_context:
        fit_poly2(curve)


def test_curve_grid_validation():
    with pytest.raises(ValueError):
        OpenWaterCurve(J=[0.0, 0.5, 0.4], K_T=[0.3, 0.2, 0.1], K_Q=[0.04, 0.03, 0.02])
    with pytest.raises(ValueError):
        OpenWaterCurve(J=[0.0, 0.5], K_T=[0.3, 0.2, 0.1], K_Q=[0.04, 0.03])


def test_fit_coefficient_file():
    batch = fit_coefficient_file(WAGENINGEN_SAMPLE, workers=2)
    assert len(batch.fits) == 3
    assert not batch.failures
    assert batch.share_poly3_below_1pct == 1.0
    for fit in batch.fits:
        assert fit.a_T0 > 0.0
        assert min(fit.a_T1, fit.a_T2, fit.a_Q1, fit.a_Q2) >= 0.0
        assert fit.report.kt_poly3 < fit.report.kt_poly2
        assert fit.report.kt_poly3 < 1e-6


def test_reduced_fit_of_coefficient_file():
    batch = fit_coefficient_file(WAGENINGEN_SAMPLE, workers=1, constrain_linear_zero=True)
    assert all(fit.a_T1 == 0.0 and fit.a_Q1 == 0.0 for fit in batch.fits)


def test_design_point_weighting_sharpens_the_fit_there():
    curve = read_wageningen_file(WAGENINGEN_SAMPLE)[0]
    j_design = 0.6 * curve.J[-1]
    plain = fit_poly2(curve)
    weighted = fit_poly2(curve, J_design=j_design)
    k_true = float(eval_wageningen(curve, j_design)[0])

    def error(fit):
        return abs(fit.a_T0 - fit.a_T1 * j_design - fit.a_T2 * j_design**2 - k_true)

    assert error(weighted) <= error(plain) + 1e-12
