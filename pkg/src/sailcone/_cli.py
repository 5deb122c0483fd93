from __future__ import annotations

import argparse
import logging
import math
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

import attrs
import numpy as np
import pandas as pd
from danom import Err, Result, safe

from sailcone._backends import BACKENDS
from sailcone._errors import SailconeError
from sailcone._io import fit_frame, pareto_frame, write_csv, write_json, write_plan
from sailcone._ocp import solve_plan
from sailcone._path import generate_random_path, sample_path, samples_frame
from sailcone._propeller import fit_coefficient_file
from sailcone._scenario import Scenario, parse_scenario
from sailcone._sim import resimulate_plan, run_zigzag, zigzag_metrics
from sailcone._sweep import DEFAULT_WEIGHTS, converter_comparison, is_monotone_tradeoff, pareto_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3

_STATUS_EXIT = {"optimal": EXIT_OK, "infeasible": EXIT_INFEASIBLE, "unbounded": EXIT_NUMERICAL, "numerical-limit": EXIT_NUMERICAL}


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _load(args: argparse.Namespace) -> Scenario:
    """Scenario with the CLI and environment overrides applied (flag beats env beats file)."""
    file = args.scenario_opt or args.scenario
    if file is None:
        raise SailconeError("no scenario given")
    scenario = parse_scenario(file)
    settings = scenario.settings.with_env()
    if args.backend:
        settings = attrs.evolve(settings, backend=args.backend)
    if args.tol is not None:
        settings = attrs.evolve(settings, tol=args.tol)
    scenario = attrs.evolve(scenario, settings=settings)
    if args.nodes is not None:
        scenario = scenario.with_nodes(args.nodes)
    if args.out is not None:
        scenario = attrs.evolve(scenario, output=Path(args.out))
    return scenario


def run_plan(args: argparse.Namespace) -> int:
    scenario = _load(args)
    sol = solve_plan(scenario.samples(), scenario.models, scenario.settings)
    write_plan(sol, scenario.output, scenario=scenario.name, seed=scenario.seed)
    if args.emit_path:
        write_csv(samples_frame(sol.path), scenario.output / "path.csv")
    return _STATUS_EXIT[sol.status]


def run_sweep(args: argparse.Namespace) -> int:
    scenario = _load(args)
    samples = scenario.samples()
    weights = args.weights or DEFAULT_WEIGHTS
    if args.converter_power:
        curves = converter_comparison(samples, scenario.models, args.converter_power, weights, scenario.settings)
        frame = pd.concat([pareto_frame(points, P_c_max=power) for power, points in curves.items()], ignore_index=True)
        all_points = [p for points in curves.values() for p in points]
        monotone = {str(power): is_monotone_tradeoff(points) for power, points in curves.items()}
    else:
        all_points = pareto_sweep(samples, scenario.models, weights, scenario.settings)
        frame = pareto_frame(all_points)
        monotone = {"all": is_monotone_tradeoff(all_points)}
    write_csv(frame, scenario.output / "pareto.csv")
    write_json({"scenario": scenario.name, "weights": list(weights), "monotone": monotone}, scenario.output / "pareto_summary.json")
    if len(all_points) < len(weights) * max(1, len(args.converter_power or ())):
        return EXIT_NUMERICAL
    return max((_STATUS_EXIT[p.status] for p in all_points), default=EXIT_OK)


def run_sim(args: argparse.Namespace) -> int:
    scenario = _load(args)
    if args.resim:
        sol = solve_plan(scenario.samples(), scenario.models, scenario.settings)
        if not sol.is_optimal:
            return _STATUS_EXIT[sol.status]
        result = resimulate_plan(sol, h=args.h, n_p_scale=args.n_p_scale)
        write_csv(result.frame(), scenario.output / "resim.csv")
        write_json(
            {"scenario": scenario.name, "rms_deviation": result.rms_deviation, "stalled_intervals": int(result.stalled.sum())},
            scenario.output / "resim_summary.json",
        )
        return EXIT_OK
    angle = math.radians(args.zigzag)
    history = run_zigzag(
        angle, scenario.vessel, scenario.prop, h=args.h, t_end=args.t_end, initial_speed=scenario.drv.v_ref
    )
    write_csv(history, scenario.output / "zigzag.csv")
    write_json(
        {"scenario": scenario.name, "angle_deg": args.zigzag} | attrs.asdict(zigzag_metrics(history, angle)),
        scenario.output / "zigzag_summary.json",
    )
    return EXIT_OK


def run_fit(args: argparse.Namespace) -> int:
    batch = fit_coefficient_file(
        args.coefficients, workers=args.workers, constrain_linear_zero=args.reduced, J_design=args.j_design
    )
    out = Path(args.out or "out")
    write_csv(fit_frame(batch), out / "fit_report.csv")
    write_json(
        {
            "source": str(args.coefficients),
            "propellers": len(batch.fits),
            "failures": [str(err.error) for err in batch.failures],
            "share_poly2_below_5pct": batch.share_poly2_below_5pct,
            "share_poly3_below_1pct": batch.share_poly3_below_1pct,
        },
        out / "fit_summary.json",
    )
    return EXIT_OK if batch.fits else EXIT_INPUT


def run_genpath(args: argparse.Namespace) -> int:
    spec = generate_random_path(
        count=args.count, seed=args.seed, step=args.step, max_turn=math.radians(args.max_turn)
    )
    out = Path(args.out or "out")
    points = pd.DataFrame(spec.control_points, columns=["x", "y"])
    write_csv(points, out / "control_points.csv")
    write_json(
        {"seed": args.seed, "count": args.count, "step": args.step, "max_turn_deg": args.max_turn, "control_points": np.asarray(spec.control_points)},
        out / "path.json",
    )
    if args.nodes is not None:
        write_csv(samples_frame(sample_path(spec, args.nodes)), out / "path_samples.csv")
    return EXIT_OK


def _common(parser: argparse.ArgumentParser, *, scenario: bool = True) -> None:
    if scenario:
        parser.add_argument("scenario", nargs="?", help="scenario JSON file or bundled scenario name")
        parser.add_argument("--scenario", dest="scenario_opt", help="scenario JSON file (alternative to the positional)")
        parser.add_argument("--backend", choices=BACKENDS, help="overrides the scenario and SAILCONE_BACKEND")
        parser.add_argument("--tol", type=float, help="solver tolerance")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--nodes", type=int, help="number of path intervals N")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sailcone", description="Convex speed and power planning for hybrid vessels.")
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="solve one speed and power plan")
    _common(plan)
    plan.add_argument("--emit-path", action="store_true", help="also write the sampled path")
    plan.set_defaults(handler=run_plan)

    sweep = sub.add_parser("sweep", help="Pareto sweep over time weights")
    _common(sweep)
    sweep.add_argument("--weights", type=_floats, help="comma-separated time weights")
    sweep.add_argument("--converter-power", type=_floats, help="comma-separated converter ratings in W")
    sweep.set_defaults(handler=run_sweep)

    sim = sub.add_parser("sim", help="zig-zag maneuver or plan re-simulation")
    _common(sim)
    sim.add_argument("--zigzag", type=float, default=20.0, help="zig-zag rudder and heading angle in degrees")
    sim.add_argument("--t-end", type=float, default=60.0, help="zig-zag duration in s")
    sim.add_argument("--h", type=float, default=0.01, help="integration step in s")
    sim.add_argument("--resim", action="store_true", help="re-simulate the scenario's plan instead")
    sim.add_argument("--n-p-scale", type=float, default=1.0, help="shaft speed factor for --resim")
    sim.set_defaults(handler=run_sim)

    fit = sub.add_parser("fit", help="fit convex poly2 coefficients to a Wageningen coefficient file")
    fit.add_argument("coefficients", type=Path)
    _common(fit, scenario=False)
    fit.add_argument("--j-design", type=float, help="weight the fit around this advance ratio")
    fit.add_argument("--reduced", action="store_true", help="force a_T1 = a_Q1 = 0")
    fit.add_argument("--workers", type=int, default=4)
    fit.set_defaults(handler=run_fit)

    genpath = sub.add_parser("genpath", help="random Bezier control polygon")
    _common(genpath, scenario=False)
    genpath.add_argument("--seed", type=int, required=True)
    genpath.add_argument("--count", type=int, default=40)
    genpath.add_argument("--step", type=float, default=25.0)
    genpath.add_argument("--max-turn", type=float, default=20.0, help="largest heading change per edge in degrees")
    genpath.set_defaults(handler=run_genpath)
    return parser


def _exit_code(result: Result) -> int:
    if not isinstance(result, Err):
        return result.unwrap()
    error = result.error
    if isinstance(error, (SailconeError, ValueError, OSError)):
        logger.error(f"{type(error).__name__}: {error}")
    else:
        logger.error(f"unexpected {type(error).__name__}: {error}")
    logger.debug(result.traceback)
    return EXIT_INPUT


def main(argv: Sequence[str] | None = None) -> int:
    """Command line entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2, which is reserved for infeasible plans
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    handler: Callable[[argparse.Namespace], int] = args.handler
    return _exit_code(safe(handler)(args))
