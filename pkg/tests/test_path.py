from __future__ import annotations

from contextlib import nullcontext

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.spatial import Delaunay

from sailcone import (
    DegeneratePathError,
    DomainError,
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
from tests.conftest import BEND_POINTS, STRAIGHT_POINTS, bend_spec, straight_spec

sigmas = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
coordinates = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False, allow_infinity=False)


@given(n=st.integers(min_value=1, max_value=40), sigma=sigmas)
def test_bernstein_partition_of_unity(n, sigma):
    weights = bernstein_basis(n, sigma)
    assert weights.shape == (1, n + 1)
    assert np.all(weights >= 0.0)
    assert weights.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50)
@given(points=st.lists(st.tuples(coordinates, coordinates), min_size=5, max_size=8), sigma=sigmas)
def test_curve_stays_in_control_hull(points, sigma):
    pts = np.asarray(points)
    spread = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    assume(spread[-1] >= 1e-3 * max(spread[0], 1e-12))
    point = bezier_eval(pts, sigma)
    assert Delaunay(pts).find_simplex(point, tol=1e-9) >= 0


@pytest.mark.parametrize(
    ("sigma", "expected"),
    [
        pytest.param(0.0, STRAIGHT_POINTS[0], id="start at the first control point"),
        pytest.param(1.0, STRAIGHT_POINTS[-1], id="end at the last control point"),
        pytest.param(0.5, [50.0, 0.0], id="equally spaced points move uniformly"),
    ],
)
def test_bezier_endpoints(sigma, expected):
    assert bezier_eval(straight_spec(), sigma) == pytest.approx(expected)


def test_bezier_eval_vectorized_rows():
    out = bezier_eval(straight_spec(), np.linspace(0.0, 1.0, 5))
    assert out.shape == (5, 2)
    assert out[:, 0] == pytest.approx([0.0, 25.0, 50.0, 75.0, 100.0])


@pytest.mark.parametrize(
    ("sigma", "expected_context"),
    [
        pytest.param(-0.01, pytest.raises(DomainError), id="below zero"),
        pytest.param(1.5, pytest.raises(DomainError), id="above one"),
        pytest.param(float("nan"), pytest.raises(DomainError), id="nan"),
        pytest.param(0.3, nullcontext(), id="inside"),
    ],
)
def test_bezier_eval_domain(sigma, expected_context):
    with expected_context:
        bezier_eval(bend_spec(), sigma)


@pytest.mark.parametrize(
    ("k", "expected_context"),
    [
        pytest.param(0, pytest.raises(DomainError), id="order zero"),
        pytest.param(5, pytest.raises(DomainError), id="order above degree"),
        pytest.param(4, nullcontext(), id="order equal to degree"),
    ],
)
def test_bezier_derivative_order(k, expected_context):
    with expected_context:
        bezier_derivative(bend_spec(), k, 0.5)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_bezier_derivative_matches_finite_difference(k):
    spec = bend_spec()
    sigma, h = 0.37, 1e-5
    lower = bezier_derivative(spec, k - 1, sigma) if k > 1 else bezier_eval(spec, sigma)
    upper = bezier_derivative(spec, k - 1, sigma + h) if k > 1 else bezier_eval(spec, sigma + h)
    assert bezier_derivative(spec, k, sigma) == pytest.approx((upper - lower) / h, rel=1e-3, abs=1e-3)


def test_derivative_of_degree_one_is_constant():
    assert bezier_derivative([[0.0, 0.0], [3.0, 4.0]], 1, 0.7) == pytest.approx([3.0, 4.0])


def test_straight_samples():
    samples = sample_path(straight_spec(), 10)
    assert len(samples.sigma) == 11
    assert samples.n_intervals == 10
    assert samples.d_sigma == pytest.approx(0.1)
    assert samples.sp12 == pytest.approx(np.full(11, 1e4))
    assert np.all(samples.theta == 0.0)
    assert np.all(samples.thetap == 0.0)
    assert path_length(samples) == pytest.approx(100.0)
    assert np.all(curvature(samples) == 0.0)


def test_orientation_derivatives_match_finite_differences():
    samples = sample_path(bend_spec(), 2000)
    ds = samples.d_sigma
    thetap_fd = np.gradient(samples.theta, ds)
    thetapp_fd = np.gradient(samples.thetap, ds)
    inner = slice(5, -5)
    assert samples.thetap[inner] == pytest.approx(thetap_fd[inner], abs=1e-3)
    assert samples.thetapp[inner] == pytest.approx(thetapp_fd[inner], abs=1e-2)


def test_mirrored_path_flips_heading_rate():
    samples = sample_path(bend_spec(), 50)
    mirror = sample_path(bend_spec().mirrored(), 50)
    assert mirror.sp12 == pytest.approx(samples.sp12)
    assert mirror.thetap == pytest.approx(-samples.thetap)
    assert mirror.s2 == pytest.approx(-samples.s2)


@pytest.mark.parametrize(
    ("points", "n_intervals", "expected_context"),
    [
        pytest.param(BEND_POINTS, 1, pytest.raises(DomainError), id="fewer than two intervals"),
        pytest.param(
            [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [10.0, 0.0], [20.0, 0.0]],
            20,
            pytest.raises(DegeneratePathError),
            id="repeated start point",
        ),
        pytest.param(BEND_POINTS, 2, nullcontext(), id="two intervals"),
    ],
)
def test_sample_path_errors(points, n_intervals, expected_context):
    with expected_context:
        sample_path(PathSpec(points), n_intervals)


def test_degenerate_path_names_the_node():
    spec = PathSpec([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [10.0, 0.0], [20.0, 0.0]])
    with pytest.raises(DegeneratePathError) as info:
        sample_path(spec, 20)
    assert info.value.node == 0


@pytest.mark.parametrize(
    "points",
    [
        pytest.param([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], id="degree three"),
        pytest.param([[1.0, 1.0]] * 6, id="all coincident"),
        pytest.param([[0.0, 0.0, 0.0]] * 5, id="three columns"),
    ],
)
def test_path_spec_rejects(points):
    with pytest.raises(ValueError):
        PathSpec(points)


def test_random_path_is_reproducible_and_forward():
    first = generate_random_path(40, seed=7)
    second = generate_random_path(40, seed=7)
    assert np.array_equal(first.control_points, second.control_points)
    assert first.degree == 39
    assert np.all(np.diff(first.control_points[:, 0]) > 0.0)
    samples = sample_path(first, 399)
    assert np.all(samples.s1p > 0.0)


def test_random_path_respects_turn_limit():
    spec = generate_random_path(30, seed=1, max_turn=np.deg2rad(10.0))
    edges = np.diff(spec.control_points, axis=0)
    headings = np.arctan2(edges[:, 1], edges[:, 0])
    assert np.all(np.abs(np.diff(headings)) <= np.deg2rad(10.0) + 1e-12)
    assert np.abs(headings[0]) <= np.deg2rad(10.0) + 1e-12


def test_samples_frame_columns():
    frame = samples_frame(sample_path(bend_spec(), 10))
    assert len(frame) == 11
    assert {"sigma", "x", "y", "theta", "sp12", "thetap", "thetapp"} <= set(frame.columns)
