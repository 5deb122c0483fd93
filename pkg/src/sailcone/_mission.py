from __future__ import annotations

from collections.abc import Iterable, Sequence

import attrs
import numpy as np
from attrs.validators import ge, gt, instance_of
from numpy.typing import ArrayLike, NDArray

from sailcone._errors import MissionError


@attrs.define(frozen=True)
class Interval:
    """Closed σ-interval ``[start, end]`` inside ``[0, 1]``."""

    start: float = attrs.field(converter=float)
    end: float = attrs.field(converter=float)

    def __attrs_post_init__(self) -> None:
        if not 0.0 <= self.start < self.end <= 1.0:
            raise MissionError(f"interval [{self.start}, {self.end}] must satisfy 0 <= start < end <= 1")

    @classmethod
    def coerce(cls, value: Interval | Sequence[float]) -> Interval:
        if isinstance(value, Interval):
            return value
        start, end = value
        return cls(start, end)

    def contains(self, sigma: ArrayLike) -> NDArray[np.bool_]:
        s = np.asarray(sigma, dtype=float)
        return (s >= self.start - 1e-12) & (s <= self.end + 1e-12)


@attrs.define(frozen=True)
class SpeedLimit:
    interval: Interval = attrs.field(converter=Interval.coerce)
    v_max: float = attrs.field(converter=float, validator=gt(0.0))

    @classmethod
    def coerce(cls, value: SpeedLimit | dict | Sequence) -> SpeedLimit:
        if isinstance(value, SpeedLimit):
            return value
        if isinstance(value, dict):
            return cls(**value)
        interval, v_max = value
        return cls(interval, v_max)


def _intervals(values: Iterable) -> tuple[Interval, ...]:
    return tuple(Interval.coerce(v) for v in values)


def _limits(values: Iterable) -> tuple[SpeedLimit, ...]:
    return tuple(SpeedLimit.coerce(v) for v in values)


def _check_disjoint(intervals: Sequence[Interval], category: str) -> None:
    ordered = sorted(intervals, key=lambda iv: iv.start)
    for first, second in zip(ordered, ordered[1:], strict=False):
        if second.start < first.end:
            raise MissionError(
                f"{category} intervals [{first.start}, {first.end}] and "
                f"[{second.start}, {second.end}] overlap"
            )


@attrs.define(frozen=True, kw_only=True)
class Mission:
    """Boundary speeds, time weight, leg definitions and discretization of one voyage.

    .. code-block:: python

        from sailcone import Mission

        Mission(v_init=1.0, v_final=1.0, omega_T=2.0, zero_emission_legs=[(0.2, 0.4), (0.8, 0.9)])
    """

    v_init: float = attrs.field(converter=float, validator=ge(0.0))
    v_final: float = attrs.field(converter=float, validator=ge(0.0))
    omega_T: float = attrs.field(default=1.0, converter=float, validator=ge(0.0))
    speed_limits: tuple[SpeedLimit, ...] = attrs.field(default=(), converter=_limits)
    zero_emission_legs: tuple[Interval, ...] = attrs.field(default=(), converter=_intervals)
    battery_only_legs: tuple[Interval, ...] = attrs.field(default=(), converter=_intervals)
    P_aux: float = attrs.field(default=0.0, converter=float, validator=ge(0.0))
    N: int = attrs.field(default=399, validator=[instance_of(int), ge(2)])

    def __attrs_post_init__(self) -> None:
        _check_disjoint([lim.interval for lim in self.speed_limits], "speed-limit")
        _check_disjoint(self.zero_emission_legs, "zero-emission")
        _check_disjoint(self.battery_only_legs, "battery-only")

    def speed_cap(self, sigma: ArrayLike) -> NDArray[np.float64]:
        """Smallest ``v_max`` covering each σ, ``inf`` where unlimited."""
        s = np.asarray(sigma, dtype=float)
        cap = np.full(s.shape, np.inf)
        for limit in self.speed_limits:
            cap = np.where(limit.interval.contains(s), np.minimum(cap, limit.v_max), cap)
        return cap

    def in_zero_emission(self, sigma: ArrayLike) -> NDArray[np.bool_]:
        return _any_contains(self.zero_emission_legs, sigma)

    def in_battery_only(self, sigma: ArrayLike) -> NDArray[np.bool_]:
        return _any_contains(self.battery_only_legs, sigma)


def _any_contains(intervals: Sequence[Interval], sigma: ArrayLike) -> NDArray[np.bool_]:
    s = np.asarray(sigma, dtype=float)
    out = np.zeros(s.shape, dtype=bool)
    for iv in intervals:
        out |= iv.contains(s)
    return out
