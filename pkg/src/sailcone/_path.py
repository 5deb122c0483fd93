from __future__ import annotations

import logging
import math

import attrs
import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.special import comb

from sailcone._errors import DegeneratePathError, DomainError

logger = logging.getLogger(__name__)

EPS_PATH = 1e-9
MIN_CONTROL_POINTS = 5


def _to_points(value: ArrayLike) -> NDArray[np.float64]:
    points = np.array(value, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:  # noqa: PLR2004
        raise ValueError(f"control points must have shape (n, 2), got {points.shape}")
    if not np.all(np.isfinite(points)):
        raise ValueError("control points must be finite")
    points.setflags(write=False)
    return points


def _enough_points(_instance: object, _attribute: attrs.Attribute, value: NDArray) -> None:
    if len(value) < MIN_CONTROL_POINTS:
        raise ValueError(
            f"a path needs at least {MIN_CONTROL_POINTS} control points (degree >= 4), got {len(value)}"
        )


def _not_coincident(_instance: object, _attribute: attrs.Attribute, value: NDArray) -> None:
    if np.allclose(np.diff(value, axis=0), 0.0):
        raise ValueError("control points are all coincident")


@attrs.define(frozen=True, eq=False)
class PathSpec:
    """Fixed path given by the control points of a Bézier curve, in meters.

    .. code-block:: python

        from sailcone import PathSpec

        spec = PathSpec([[0, 0], [10, 0], [20, 5], [30, 5], [40, 0]])
        spec.degree == 4
    """

    control_points: NDArray[np.float64] = attrs.field(
        converter=_to_points, validator=[_enough_points, _not_coincident]
    )

    @property
    def degree(self) -> int:
        return len(self.control_points) - 1

    def mirrored(self) -> PathSpec:
        """Mirror image about the x-axis."""
        return PathSpec(self.control_points * np.array([1.0, -1.0]))


@attrs.define(frozen=True, eq=False)
class PathSamples:
    """Path kinematics at the ``N + 1`` evenly spaced discretization nodes."""

    sigma: NDArray[np.float64]
    s1: NDArray[np.float64]
    s2: NDArray[np.float64]
    s1p: NDArray[np.float64]
    s2p: NDArray[np.float64]
    s1pp: NDArray[np.float64]
    s2pp: NDArray[np.float64]
    s1ppp: NDArray[np.float64]
    s2ppp: NDArray[np.float64]
    sp12: NDArray[np.float64]
    theta: NDArray[np.float64]
    thetap: NDArray[np.float64]
    thetapp: NDArray[np.float64]

    @property
    def n_intervals(self) -> int:
        return len(self.sigma) - 1

    @property
    def d_sigma(self) -> float:
        return 1.0 / self.n_intervals


def _control_points(spec: PathSpec | ArrayLike) -> NDArray[np.float64]:
    if isinstance(spec, PathSpec):
        return spec.control_points
    return _to_points(spec)


def _check_sigma(sigma: ArrayLike) -> NDArray[np.float64]:
    values = np.asarray(sigma, dtype=float)
    if np.any(values < 0.0) or np.any(values > 1.0) or not np.all(np.isfinite(values)):
        raise DomainError(f"sigma must lie in [0, 1], got {sigma}")
    return values


def bernstein_basis(n: int, sigma: ArrayLike) -> NDArray[np.float64]:
    """Bernstein weights ``C(n, i) σ^i (1 − σ)^(n − i)``, one column per ``i``."""
    s = np.atleast_1d(np.asarray(sigma, dtype=float))[:, None]
    i = np.arange(n + 1)[None, :]
    return comb(n, i) * s**i * (1.0 - s) ** (n - i)


def bezier_eval(spec: PathSpec | ArrayLike, sigma: ArrayLike) -> NDArray[np.float64]:
    """Point(s) on the curve as the Bernstein-weighted combination of the control points.

    A scalar ``sigma`` gives a 2-vector, an array gives one row per value.

    .. code-block:: python

        from sailcone import bezier_eval

        bezier_eval([[0, 0], [2, 0]], 0.25)  # array([0.5, 0. ])
    """
    points = _control_points(spec)
    values = _check_sigma(sigma)
    out = bernstein_basis(len(points) - 1, values) @ points
    return out[0] if values.ndim == 0 else out


def bezier_derivative(spec: PathSpec | ArrayLike, k: int, sigma: ArrayLike) -> NDArray[np.float64]:
    """``k``-th derivative ``n (n − 1) … (n − k + 1) Σ Θ_{i, n−k}(σ) D_i^k`` of the curve.

    ``D^k`` are the ``k``-th forward differences of the control points.
    """
    points = _control_points(spec)
    n = len(points) - 1
    if k < 1 or k > n:
        raise DomainError(f"derivative order must satisfy 1 <= k <= {n}, got {k}")
    values = _check_sigma(sigma)
    differences = np.diff(points, n=k, axis=0)
    out = math.perm(n, k) * (bernstein_basis(n - k, values) @ differences)
    return out[0] if values.ndim == 0 else out


def _orientation(
    d1: NDArray, d2: NDArray, d3: NDArray
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    s1p, s2p = d1[:, 0], d1[:, 1]
    s1pp, s2pp = d2[:, 0], d2[:, 1]
    s1ppp, s2ppp = d3[:, 0], d3[:, 1]
    k1 = 2.0 * s1p * s1pp + 2.0 * s2p * s2pp
    k2 = s1p**2 + s2p**2
    theta = np.unwrap(np.arctan2(s2p, s1p))
    cross = s1p * s2pp - s2p * s1pp
    thetap = cross / k2
    thetapp = (s1p * s2ppp - s2p * s1ppp) / k2 - cross * k1 / k2**2
    return theta, thetap, thetapp


def sample_path(spec: PathSpec, n_intervals: int) -> PathSamples:
    """Sample position, derivatives and orientation at ``n_intervals + 1`` evenly spaced nodes.

    .. code-block:: python

        from sailcone import generate_random_path, sample_path

        samples = sample_path(generate_random_path(40, seed=7), 399)
        len(samples.sigma) == 400
    """
    if n_intervals < 2:  # noqa: PLR2004
        raise DomainError(f"need at least 2 intervals, got {n_intervals}")
    if spec.degree < 3:  # noqa: PLR2004
        raise DomainError("the third derivative needs a curve of degree >= 3")
    sigma = np.linspace(0.0, 1.0, n_intervals + 1)
    position = bezier_eval(spec, sigma)
    d1, d2, d3 = (bezier_derivative(spec, k, sigma) for k in (1, 2, 3))
    sp12 = d1[:, 0] ** 2 + d1[:, 1] ** 2

    degenerate = np.flatnonzero(sp12 <= EPS_PATH)
    if degenerate.size:
        node = int(degenerate[0])
        raise DegeneratePathError(node, float(sp12[node]))

    theta, thetap, thetapp = _orientation(d1, d2, d3)
    logger.debug(f"sampled path of degree {spec.degree} at {n_intervals + 1} nodes")
    return PathSamples(
        sigma=sigma,
        s1=position[:, 0],
        s2=position[:, 1],
        s1p=d1[:, 0],
        s2p=d1[:, 1],
        s1pp=d2[:, 0],
        s2pp=d2[:, 1],
        s1ppp=d3[:, 0],
        s2ppp=d3[:, 1],
        sp12=sp12,
        theta=theta,
        thetap=thetap,
        thetapp=thetapp,
    )


def generate_random_path(
    count: int = 40,
    seed: int | None = None,
    step: float = 25.0,
    max_turn: float = np.deg2rad(20.0),
    max_heading: float = np.deg2rad(60.0),
) -> PathSpec:
    """Random control polygon built as a heading random walk.

    Headings stay within ``±max_heading`` of +x so every polygon edge moves forward,
    which keeps ``s1'`` positive along the whole curve.
    """
    rng = np.random.default_rng(seed)
    turns = rng.uniform(-max_turn, max_turn, size=count - 1)
    headings = np.empty(count - 1)
    heading = 0.0
    for i, turn in enumerate(turns):
        heading = float(np.clip(heading + turn, -max_heading, max_heading))
        headings[i] = heading
    edges = step * np.column_stack([np.cos(headings), np.sin(headings)])
    points = np.vstack([np.zeros((1, 2)), np.cumsum(edges, axis=0)])
    return PathSpec(points)


def path_length(samples: PathSamples) -> float:
    return float(np.trapezoid(np.sqrt(samples.sp12), samples.sigma))


def curvature(samples: PathSamples) -> NDArray[np.float64]:
    return samples.thetap / np.sqrt(samples.sp12)


def samples_frame(samples: PathSamples) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "sigma": samples.sigma,
            "x": samples.s1,
            "y": samples.s2,
            "theta": samples.theta,
            "sp12": samples.sp12,
            "s1p": samples.s1p,
            "s2p": samples.s2p,
            "s1pp": samples.s1pp,
            "s2pp": samples.s2pp,
            "thetap": samples.thetap,
            "thetapp": samples.thetapp,
        }
    )
