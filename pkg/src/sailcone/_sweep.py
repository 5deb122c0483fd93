from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence

import attrs
import numpy as np
from danom import Result, Stream, safe

from sailcone._backends import SolverSettings
from sailcone._ocp import PlanModels, solve_plan
from sailcone._path import PathSamples

logger = logging.getLogger(__name__)

DEFAULT_WEIGHTS = (10.0, 3.33, 2.0, 1.25, 0.83)


@attrs.define(frozen=True)
class ParetoPoint:
    weight: float
    time: float
    fuel: float
    status: str

    def as_row(self) -> dict[str, float | str]:
        return attrs.asdict(self)


def _solve_weight(weight: float, path: PathSamples, models: PlanModels, settings: SolverSettings) -> ParetoPoint:
    mission = attrs.evolve(models.mission, omega_T=weight)
    sol = solve_plan(path, attrs.evolve(models, mission=mission), attrs.evolve(settings, workers=1))
    point = ParetoPoint(weight, sol.time_total, sol.fuel_total, sol.status)
    logger.info(f"pareto point ω_T={weight}: {point.status}, time {point.time:.3f} s, fuel {point.fuel:.3f} mg")
    return point


def pareto_sweep(
    path: PathSamples,
    models: PlanModels,
    weights: Iterable[float] = DEFAULT_WEIGHTS,
    settings: SolverSettings | None = None,
) -> tuple[ParetoPoint, ...]:
    """One solve per time weight, fanned out over worker threads and sorted by voyage time.

    A point whose solve raises is logged and dropped; non-optimal statuses are kept so the
    caller sees them.

    .. code-block:: python

        from sailcone import pareto_sweep

        points = pareto_sweep(samples, models, [10, 3.33, 2, 1.25, 0.83])
        [(p.time, p.fuel) for p in points]
    """
    settings = settings or SolverSettings()
    results = (
        Stream.from_iterable([float(w) for w in weights])
        .map(safe(_solve_weight), path=path, models=models, settings=settings)
        .par_collect(settings.workers, use_threads=True)
    )
    oks, errs = Stream.from_iterable(results).partition(Result.result_is_ok)
    for err in errs.collect():
        args, _kwargs = err.input_args
        logger.warning(f"pareto point failed for ω_T={args[0]}: {err.error}")
    points = oks.map(Result.result_unwrap).collect()
    return tuple(sorted(points, key=lambda p: (np.nan_to_num(p.time, nan=np.inf), p.weight)))


def converter_comparison(
    path: PathSamples,
    models: PlanModels,
    powers: Sequence[float],
    weights: Iterable[float] = DEFAULT_WEIGHTS,
    settings: SolverSettings | None = None,
) -> dict[float, tuple[ParetoPoint, ...]]:
    """Pareto curves for converters rescaled to each rated power in ``powers``."""
    weights = tuple(weights)
    return {
        float(power): pareto_sweep(
            path, attrs.evolve(models, conv=models.conv.rescaled(float(power))), weights, settings
        )
        for power in powers
    }


def is_monotone_tradeoff(points: Sequence[ParetoPoint], rtol: float = 1e-6) -> bool:
    """Fuel is non-increasing as time increases along optimal points."""
    optimal = [p for p in points if p.status == "optimal"]
    return all(
        later.fuel <= earlier.fuel * (1.0 + rtol) + rtol
        for earlier, later in zip(optimal, optimal[1:], strict=False)
    )
