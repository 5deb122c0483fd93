from __future__ import annotations

import logging
import os
import time
from typing import Literal

import attrs
import cvxpy as cp
import numpy as np
from attrs.validators import ge, gt, in_, instance_of
from numpy.typing import NDArray

from sailcone._cone import ConeProgram
from sailcone._errors import ConfigurationError
from sailcone._ipm import IpmSettings, Status, solve_ipm

logger = logging.getLogger(__name__)

BACKEND_ENV = "SAILCONE_BACKEND"
BACKENDS = ("clarabel", "ecos", "scs", "ipm")
Backend = Literal["clarabel", "ecos", "scs", "ipm"]

_CVXPY_SOLVERS = {"clarabel": cp.CLARABEL, "ecos": cp.ECOS, "scs": cp.SCS}


@attrs.define(frozen=True, kw_only=True)
class SolverSettings:
    """Backend selection and tolerances shared by every solve of a run.

    .. code-block:: python

        from sailcone import SolverSettings

        SolverSettings(backend="ipm", tol=1e-7).with_env()
    """

    backend: str = attrs.field(default="clarabel", validator=in_(BACKENDS))
    tol: float = attrs.field(default=1e-8, converter=float, validator=gt(0.0))
    max_iter: int = attrs.field(default=200, validator=[instance_of(int), ge(1)])
    friction_passes: int = attrs.field(default=1, validator=[instance_of(int), ge(0)])
    tightness_tol: float = attrs.field(default=1e-5, converter=float, validator=gt(0.0))
    workers: int = attrs.field(default=4, validator=[instance_of(int), ge(1)])

    def with_env(self) -> SolverSettings:
        """Apply the ``SAILCONE_BACKEND`` override when it is set."""
        override = os.environ.get(BACKEND_ENV)
        if not override:
            return self
        backend = override.strip().lower()
        if backend not in BACKENDS:
            raise ConfigurationError(f"{BACKEND_ENV}={override!r} is not one of {BACKENDS}")
        return attrs.evolve(self, backend=backend)


@attrs.define(frozen=True)
class ConeSolution:
    """Primal-dual result of one cone solve in the program's own (scaled) variables."""

    status: Status
    x: NDArray[np.float64]
    y: NDArray[np.float64]
    z: NDArray[np.float64]
    objective: float
    iterations: int
    solve_time: float
    backend: str

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


def _status_from_cvxpy(status: str) -> Status:
    if status == cp.OPTIMAL:
        return "optimal"
    if status == cp.OPTIMAL_INACCURATE:
        logger.warning("solver reached reduced accuracy only; reporting optimal")
        return "optimal"
    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return "infeasible"
    if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        return "unbounded"
    return "numerical-limit"


def _solver_options(backend: str, settings: SolverSettings) -> dict[str, float | int]:
    tol, max_iter = settings.tol, settings.max_iter
    if backend == "clarabel":
        return {"tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol, "max_iter": max_iter}
    if backend == "ecos":
        return {"abstol": tol, "reltol": tol, "feastol": tol, "max_iters": max_iter}
    return {"eps_abs": tol, "eps_rel": tol, "max_iters": max(max_iter, 10_000)}


def _cone_dual(constraint: cp.Constraint, dim: int, count: int) -> NDArray[np.float64]:
    value = constraint.dual_value
    # cvxpy leaves [None, None] on SOC constraints when no dual exists
    if value is None or (isinstance(value, list) and any(part is None for part in value)):
        return np.full(dim * count, np.nan)
    if isinstance(value, list):
        t, rest = np.ravel(value[0]), np.reshape(value[1], (dim - 1, count), order="F")
        return np.vstack([t[None, :], rest]).ravel(order="F")
    return np.ravel(value)


def _solve_cvxpy(program: ConeProgram, settings: SolverSettings) -> ConeSolution:
    x = cp.Variable(program.n)
    constraints: list[cp.Constraint] = []
    if program.A.shape[0]:
        constraints.append(program.A @ x == program.b)
    slack = program.h - program.G @ x
    cone_constraints = []
    for blk in program.blocks:
        part = slack[blk.start : blk.stop]
        if blk.dim == 1:
            cone = part >= 0
        else:
            cols = cp.reshape(part, (blk.dim, blk.count), order="F")
            cone = cp.SOC(cols[0], cols[1:], axis=0)
        cone_constraints.append((blk, cone))
        constraints.append(cone)

    problem = cp.Problem(cp.Minimize(program.c @ x + program.c0), constraints)
    solver = _CVXPY_SOLVERS[settings.backend]
    start = time.perf_counter()
    try:
        problem.solve(solver=solver, **_solver_options(settings.backend, settings))
    except cp.error.SolverError as exc:
        logger.warning(f"{settings.backend} failed: {exc}")
        return ConeSolution(
            "numerical-limit",
            np.full(program.n, np.nan),
            np.full(program.A.shape[0], np.nan),
            np.full(program.G.shape[0], np.nan),
            np.nan,
            0,
            time.perf_counter() - start,
            settings.backend,
        )
    elapsed = time.perf_counter() - start

    status = _status_from_cvxpy(problem.status)
    eq_dual = (
        np.ravel(constraints[0].dual_value)
        if program.A.shape[0] and constraints[0].dual_value is not None
        else np.full(program.A.shape[0], np.nan)
    )
    z = np.concatenate([_cone_dual(con, blk.dim, blk.count) for blk, con in cone_constraints])
    stats = problem.solver_stats
    return ConeSolution(
        status=status,
        x=np.asarray(x.value, dtype=float) if x.value is not None else np.full(program.n, np.nan),
        y=eq_dual,
        z=z,
        objective=float(problem.value) if status == "optimal" else np.nan,
        iterations=int(stats.num_iters or 0) if stats is not None else 0,
        solve_time=elapsed,
        backend=settings.backend,
    )


def _solve_bundled(program: ConeProgram, settings: SolverSettings) -> ConeSolution:
    result = solve_ipm(
        program,
        IpmSettings(feastol=settings.tol, abstol=settings.tol, reltol=settings.tol, max_iter=settings.max_iter),
    )
    objective = program.objective(result.x) if result.status == "optimal" else np.nan
    return ConeSolution(
        result.status,
        result.x,
        result.y,
        result.z,
        objective,
        result.iterations,
        result.solve_time,
        "ipm",
    )


def solve(program: ConeProgram, settings: SolverSettings | None = None) -> ConeSolution:
    """Solve a cone program with the configured backend.

    Infeasibility and unboundedness are statuses, never exceptions. An unknown or
    unavailable backend raises ``ConfigurationError``.

    .. code-block:: python

        from sailcone import SolverSettings, solve

        solution = solve(program, SolverSettings(backend="ipm"))
        solution.status  # "optimal"
    """
    settings = settings or SolverSettings()
    if settings.backend == "ipm":
        solution = _solve_bundled(program, settings)
    else:
        solver = _CVXPY_SOLVERS[settings.backend]
        if solver not in cp.installed_solvers():
            raise ConfigurationError(f"backend {settings.backend!r} is not installed")
        solution = _solve_cvxpy(program, settings)
    logger.info(
        f"{solution.backend}: {solution.status} in {solution.solve_time:.3f} s "
        f"({solution.iterations} iterations, objective {solution.objective:.6g})"
    )
    return solution
