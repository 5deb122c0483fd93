"""CSV and JSON emission for plans, sweeps, simulations and fits."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterable, Mapping
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

import attrs
import numpy as np
import pandas as pd

from sailcone._ocp import PlanSolution
from sailcone._propeller import FitBatch
from sailcone._sweep import ParetoPoint

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


def _padded(values: np.ndarray, length: int) -> np.ndarray:
    out = np.full(length, np.nan)
    out[: len(values)] = values
    return out


def solution_frame(sol: PlanSolution) -> pd.DataFrame:
    """One row per path node. Control columns hold NaN on the last node."""
    n = len(sol.sigma)
    nodes = {
        "sigma": sol.sigma,
        "x": sol.path.s1,
        "y": sol.path.s2,
        "theta": sol.path.theta,
        "b": sol.b,
        "v": sol.v,
        "dE": sol.dE,
        "soc": sol.soc,
    }
    controls = {
        "y_t": sol.y_t,
        "F_D": sol.F_D,
        "F_H": sol.F_H,
        "F_R": sol.F_R,
        "D_R": sol.D_R,
        "F_P": sol.F_P,
        "T_p": sol.T_p,
        "Q_p": sol.Q_p,
        "n_p": sol.n_p,
        "ntil": sol.ntil,
        "z": sol.z,
        "F_dEp": sol.F_dEp,
        "F_EM": sol.F_EM,
        "F_c": sol.F_c,
        "F_c_int": sol.F_c_int,
        "F_bat": sol.F_bat,
        "F_batd": sol.F_batd,
        "P_prop": sol.P_prop,
        "P_c": sol.P_c,
        "P_batt": sol.P_batt,
        "k_c": sol.k_c.astype(float),
        "forced_off": sol.forced_off.astype(float),
        "friction": sol.friction,
        "fuel": sol.fuel,
    }
    frame = pd.DataFrame(nodes | {name: _padded(np.asarray(values, dtype=float), n) for name, values in controls.items()})
    if sol.tightness is not None:
        for name in ("y_residual", "z_residual", "balance_residual"):
            frame[name] = _padded(getattr(sol.tightness, name), n)
    return frame


def _clean(value: Any) -> Any:  # noqa: ANN401
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as ``null``."""
    if isinstance(value, Mapping):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def summary_dict(sol: PlanSolution, **extra: Any) -> dict[str, Any]:  # noqa: ANN401
    """Status, objective split, tightness maxima, energy totals and solver statistics."""
    summary = {
        "status": sol.status,
        "backend": sol.backend,
        "objective": sol.objective,
        "objective_split": {"fuel": sol.fuel_total, "time": sol.models.mission.omega_T * sol.time_total},
        "time": sol.time_total,
        "fuel": sol.fuel_total,
        "omega_T": sol.models.mission.omega_T,
        "N": sol.path.n_intervals,
        "d_sigma": sol.d_sigma,
        "final_dE": float(sol.dE[-1]),
        "solve_time": sol.solve_time,
        "iterations": sol.iterations,
        "friction_passes": sol.friction_passes,
        "tightness": sol.tightness.as_dict() if sol.tightness is not None else None,
        "energy": attrs.asdict(sol.energy),
        "created": datetime.now(UTC).isoformat(timespec="seconds"),
    }
    return _clean(summary | extra)


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"wrote {len(frame)} rows to {path}")
    return path


def write_json(document: Mapping[str, Any], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(document), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"wrote {path}")
    return path


def read_summary(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_plan(sol: PlanSolution, out: str | Path, stem: str = "plan", **extra: Any) -> tuple[Path, Path]:  # noqa: ANN401
    """``<stem>.csv`` and ``<stem>_summary.json`` under ``out``."""
    out = Path(out)
    frame = solution_frame(sol) if sol.is_optimal else pd.DataFrame({"sigma": sol.sigma})
    return (
        write_csv(frame, out / f"{stem}.csv"),
        write_json(summary_dict(sol, **extra), out / f"{stem}_summary.json"),
    )


def pareto_frame(points: Iterable[ParetoPoint], **columns: Any) -> pd.DataFrame:  # noqa: ANN401
    frame = pd.DataFrame([p.as_row() for p in points], columns=["weight", "time", "fuel", "status"])
    for name, value in columns.items():
        frame[name] = value
    return frame


def fit_frame(batch: FitBatch) -> pd.DataFrame:
    rows = [
        fit.report.as_row()
        | {"a_T0": fit.a_T0, "a_T1": fit.a_T1, "a_T2": fit.a_T2, "a_Q0": fit.a_Q0, "a_Q1": fit.a_Q1, "a_Q2": fit.a_Q2}
        for fit in batch.fits
    ]
    return pd.DataFrame(rows)
