from __future__ import annotations

import math
from contextlib import nullcontext

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sailcone import (
    Controls,
    DomainError,
    InfeasibleDirectionError,
    RudderModel,
    SimState,
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
from tests.conftest import reference_propeller, reference_rudder, reference_vessel

SP12 = 1e4
finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)


def test_friction_line_value():
    vessel = reference_vessel()
    rn = 1.53 * vessel.L / vessel.nu
    assert friction_coefficient(1.53, vessel) == pytest.approx(0.075 / (math.log10(rn) - 2.0) ** 2)
    assert 3.0e-3 < float(friction_coefficient(1.53, vessel)) < 3.5e-3


@pytest.mark.parametrize(
    ("v", "expected_context"),
    [
        pytest.param(0.0, pytest.raises(DomainError), id="at rest"),
        pytest.param(-1.0, pytest.raises(DomainError), id="negative speed"),
        pytest.param(1e-8, pytest.raises(DomainError), id="Reynolds number below 100"),
        pytest.param(0.5, nullcontext(), id="model speed"),
    ],
)
def test_friction_domain(v, expected_context):
    with expected_context:
        friction_coefficient(v, reference_vessel())


def test_resistance_is_zero_at_rest():
    vessel = reference_vessel()
    out = resistance_coefficient([0.0, 1.0], vessel)
    assert out[0] == 0.0
    assert out[1] == pytest.approx(float(friction_coefficient(1.0, vessel)) + vessel.C_R)


@given(num=finite, den=positive)
def test_quad_over_lin_is_even(num, den):
    assert quad_over_lin(num, den, "test") == pytest.approx(quad_over_lin(-num, den, "test"))
    assert quad_over_lin(num, den, "test") >= 0.0


@pytest.mark.parametrize(
    ("num", "den", "expected_context", "expected"),
    [
        pytest.param(0.0, 0.0, nullcontext(), 0.0, id="both zero"),
        pytest.param(3.0, 2.0, nullcontext(), 4.5, id="regular"),
        pytest.param(1.0, 0.0, pytest.raises(InfeasibleDirectionError), None, id="zero denominator"),
    ],
)
def test_quad_over_lin(num, den, expected_context, expected):
    with expected_context:
        assert quad_over_lin(num, den, "test") == pytest.approx(expected)


def test_drift_bound():
    vessel = reference_vessel()
    b = 2.25 / SP12
    assert drift_force_bound(b, SP12, vessel) == pytest.approx(0.5 * vessel.rho * vessel.S * vessel.C_L_max * 2.25)
    with pytest.raises(DomainError):
        drift_force_bound(-1e-6, SP12, vessel)


@pytest.mark.parametrize("c_l", [0.0, 0.02, -0.05])
def test_drag_epigraph_is_tight_at_physical_lift(c_l):
    vessel = reference_vessel()
    v = 1.4
    b = v**2 / SP12
    f_h = 0.5 * vessel.rho * vessel.S * c_l * v**2
    coefficient = resistance_coefficient(v, vessel)
    bound = drag_epigraph_terms(f_h, b, SP12, vessel, coefficient=coefficient)
    assert bound == pytest.approx(drag_force(v, c_l, vessel), rel=1e-10)
    assert drag_epigraph_terms(f_h, b, SP12, vessel) == pytest.approx(bound, rel=1e-10)


def test_yaw_damping_is_linear_in_b():
    vessel = reference_vessel()
    one = yaw_damping_force(1e-4, SP12, 0.3, vessel)
    assert yaw_damping_force(2e-4, SP12, 0.3, vessel) == pytest.approx(2.0 * one)
    assert one == pytest.approx(vessel.x_T * added_mass_per_length(vessel) * 0.3 * 100.0 * 1e-4)


def test_rudder_model_limits():
    with pytest.raises(ValueError):
        RudderModel(A_R=0.012, b_R=0.124, omega_max=math.radians(25.0))
    rudder = reference_rudder()
    lam = rudder.Lambda
    assert rudder.lift_slope == pytest.approx(2.0 * math.pi * lam * (lam + 1.0) / (lam + 2.0) ** 2)


@pytest.mark.parametrize(
    ("power", "ratio"),
    [
        pytest.param(1, 1.0, id="density to the first power"),
        pytest.param(2, 1.0 / 997.0, id="density squared"),
    ],
)
def test_rudder_drag_epigraph_against_physical(power, ratio):
    vessel = reference_vessel(rudder=reference_rudder(drag_rho_power=power))
    prop = reference_propeller()
    rudder = vessel.rudder
    b, t_p, omega = 1.5**2 / SP12, 4.0, math.radians(12.0)
    inflow = float(rudder_inflow(t_p, b, SP12, prop))
    c_k = float(rudder_lift_coefficient(omega, rudder))
    f_r = 0.5 * vessel.rho * c_k * rudder.A_R * rudder.k_tm**2 * inflow
    physical = rudder_drag_physical(c_k, rudder.k_tm**2 * inflow, vessel)
    assert rudder_drag_epigraph(f_r, t_p, b, SP12, vessel, prop) == pytest.approx(ratio * physical, rel=1e-10)


def test_rudder_force_bound_matches_maximum_deflection():
    vessel = reference_vessel()
    prop = reference_propeller()
    b, t_p = 1.5**2 / SP12, 4.0
    inflow = float(rudder_inflow(t_p, b, SP12, prop))
    angle, _ = rudder_angle_for_force(float(rudder_force_bound(t_p, b, SP12, vessel, prop)), inflow, vessel)
    assert angle == pytest.approx(vessel.rudder.omega_max)


@pytest.mark.parametrize(
    ("scale", "expected_clamped"),
    [
        pytest.param(0.5, False, id="half the bound"),
        pytest.param(-0.9, False, id="port side"),
        pytest.param(1.5, True, id="beyond the bound"),
    ],
)
def test_rudder_angle_for_force(scale, expected_clamped):
    vessel = reference_vessel()
    prop = reference_propeller()
    b, t_p = 1.2**2 / SP12, 3.0
    inflow = float(rudder_inflow(t_p, b, SP12, prop))
    force = scale * float(rudder_force_bound(t_p, b, SP12, vessel, prop))
    angle, clamped = rudder_angle_for_force(force, inflow, vessel)
    assert clamped is expected_clamped
    assert abs(angle) <= vessel.rudder.omega_max + 1e-12
    if not clamped:
        rudder = vessel.rudder
        produced = 0.5 * vessel.rho * float(rudder_lift_coefficient(angle, rudder)) * rudder.A_R * inflow
        assert produced == pytest.approx(force)


def test_rudder_angle_without_inflow():
    vessel = reference_vessel()
    assert rudder_angle_for_force(0.0, 0.0, vessel) == (0.0, False)
    assert rudder_angle_for_force(1.0, 0.0, vessel) == (0.0, True)


def test_physical_forces_mirror_symmetry():
    vessel = reference_vessel()
    prop = reference_propeller()
    state = SimState(0.0, 1.0, 2.0, 0.1, 1.4, 0.15, 0.02)
    mirror = SimState(0.0, 1.0, -2.0, -0.1, 1.4, -0.15, -0.02)
    forces = physical_forces(state, Controls(12.0, math.radians(8.0)), vessel, prop)
    mirrored = physical_forces(mirror, Controls(12.0, math.radians(-8.0)), vessel, prop)
    assert mirrored.T_p == pytest.approx(forces.T_p)
    assert mirrored.F_D == pytest.approx(forces.F_D)
    assert mirrored.D_R == pytest.approx(forces.D_R)
    assert mirrored.F_H == pytest.approx(-forces.F_H)
    assert mirrored.F_R == pytest.approx(-forces.F_R)
    assert mirrored.F_P == pytest.approx(-forces.F_P)


def test_physical_forces_clamp_flags():
    vessel = reference_vessel()
    prop = reference_propeller()
    sideways = SimState(0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0)
    forces = physical_forces(sideways, Controls(10.0, math.radians(30.0)), vessel, prop)
    assert forces.beta_clamped
    assert forces.omega_clamped
    assert abs(forces.F_H) <= 0.5 * vessel.rho * vessel.S * vessel.C_L_max * 2.0 + 1e-9


def test_physical_forces_at_rest():
    forces = physical_forces(SimState(), Controls(0.0), reference_vessel(), reference_propeller())
    assert (forces.T_p, forces.F_D, forces.F_H, forces.F_P, forces.F_R, forces.D_R) == (0.0,) * 6


def test_vessel_defaults():
    vessel = reference_vessel()
    assert vessel.x_T == pytest.approx(vessel.L / 2.0)
    assert vessel.tau == (0.0, 0.0, 0.0)
    assert vessel.m_eff == pytest.approx(189.0 * 1.05)
    assert vessel.I_eff == pytest.approx(201.0 + 0.8 * 251.0)
    assert np.diag(vessel.mass_matrix) == pytest.approx([vessel.m_eff, vessel.m_eff, vessel.I_eff])
    with pytest.raises(ValueError):
        reference_vessel(tau=(1.0, 2.0))
