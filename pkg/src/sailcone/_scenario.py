"""JSON scenario ingestion: one nested object per model, validated into attrs instances."""

from __future__ import annotations

import json
import logging
import math
import re
from importlib import resources
from pathlib import Path
from typing import Any

import attrs
from attrs.validators import instance_of

from sailcone._backends import SolverSettings
from sailcone._errors import ConfigurationError, FitError, MissionError, ScenarioError
from sailcone._hydro import RudderModel, VesselModel
from sailcone._mission import Mission
from sailcone._ocp import PlanModels
from sailcone._path import PathSamples, PathSpec, generate_random_path, sample_path
from sailcone._powertrain import BatteryModel, ConverterModel, DrivetrainModel
from sailcone._propeller import PropellerModel, fit_poly2, read_wageningen_file

logger = logging.getLogger(__name__)

SECTIONS = ("name", "description", "path", "vessel", "propeller", "drivetrain", "converter", "battery", "mission", "solver", "output")
_FIELD_NAME = re.compile(r"'(\w+)'")


@attrs.define(frozen=True, kw_only=True)
class Scenario:
    """Every model of one voyage plus solver settings and the output directory."""

    name: str = attrs.field(validator=instance_of(str))
    path: PathSpec = attrs.field(validator=instance_of(PathSpec))
    vessel: VesselModel = attrs.field(validator=instance_of(VesselModel))
    prop: PropellerModel = attrs.field(validator=instance_of(PropellerModel))
    drv: DrivetrainModel = attrs.field(validator=instance_of(DrivetrainModel))
    conv: ConverterModel = attrs.field(validator=instance_of(ConverterModel))
    batt: BatteryModel = attrs.field(validator=instance_of(BatteryModel))
    mission: Mission = attrs.field(validator=instance_of(Mission))
    settings: SolverSettings = attrs.field(factory=SolverSettings)
    output: Path = attrs.field(default=Path("out"), converter=Path)
    seed: int | None = None
    source: Path | None = None

    @property
    def models(self) -> PlanModels:
        return PlanModels(
            vessel=self.vessel, prop=self.prop, drv=self.drv, conv=self.conv, batt=self.batt, mission=self.mission
        )

    def samples(self) -> PathSamples:
        return sample_path(self.path, self.mission.N)

    def with_nodes(self, n: int) -> Scenario:
        return attrs.evolve(self, mission=attrs.evolve(self.mission, N=n))


def _check_keys(section: dict[str, Any], allowed: set[str], where: str) -> None:
    if not isinstance(section, dict):
        raise ScenarioError(where, f"expected an object, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            raise ScenarioError(f"{where}.{key}" if where else key, "unknown key")


def _field_names(cls: type) -> set[str]:
    return {a.alias or a.name for a in attrs.fields(cls)}


def _build(cls: type, kwargs: dict[str, Any], where: str, invariant: str | None = None) -> Any:  # noqa: ANN401
    try:
        return cls(**kwargs)
    except MissionError as exc:
        raise ScenarioError(where, str(exc), invariant or "disjoint intervals inside [0, 1]") from exc
    except (TypeError, ValueError) as exc:
        found = _FIELD_NAME.search(str(exc))
        field = f"{where}.{found.group(1)}" if found else where
        raise ScenarioError(field, str(exc), invariant) from exc


def _degrees(section: dict[str, Any], key: str, where: str) -> dict[str, Any]:
    out = dict(section)
    deg_key = f"{key}_deg"
    if deg_key in out:
        if key in out:
            raise ScenarioError(f"{where}.{deg_key}", f"give either {key} or {deg_key}, not both")
        out[key] = math.radians(float(out.pop(deg_key)))
    return out


def _parse_path(section: dict[str, Any]) -> tuple[PathSpec, int | None]:
    _check_keys(section, {"control_points", "random"}, "path")
    if ("control_points" in section) == ("random" in section):
        raise ScenarioError("path", "give exactly one of control_points or random")
    if "control_points" in section:
        return _build(PathSpec, {"control_points": section["control_points"]}, "path"), None
    random = section["random"]
    _check_keys(random, {"count", "seed", "step", "max_turn_deg", "max_heading_deg"}, "path.random")
    kwargs = {k: random[k] for k in ("count", "seed", "step") if k in random}
    for key in ("max_turn", "max_heading"):
        if f"{key}_deg" in random:
            kwargs[key] = math.radians(float(random[f"{key}_deg"]))
    try:
        spec = generate_random_path(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError("path.random", str(exc)) from exc
    return spec, kwargs.get("seed")


def _parse_vessel(section: dict[str, Any]) -> VesselModel:
    _check_keys(section, _field_names(VesselModel) | {"beta_max_deg"}, "vessel")
    kwargs = _degrees(section, "beta_max", "vessel")
    if "rudder" not in kwargs:
        raise ScenarioError("vessel.rudder", "missing rudder section")
    rudder_section = kwargs["rudder"]
    _check_keys(rudder_section, _field_names(RudderModel) | {"omega_max_deg"}, "vessel.rudder")
    kwargs["rudder"] = _build(RudderModel, _degrees(rudder_section, "omega_max", "vessel.rudder"), "vessel.rudder")
    return _build(VesselModel, kwargs, "vessel")


def _parse_propeller(section: dict[str, Any], base: Path) -> PropellerModel:
    if "fit" not in section:
        _check_keys(section, _field_names(PropellerModel), "propeller")
        return _build(PropellerModel, section, "propeller")
    _check_keys(section, {"fit", "D_p", "f_w", "k_p", "rho"}, "propeller")
    fit = section["fit"]
    _check_keys(fit, {"coefficients", "geometry", "J_design", "reduced"}, "propeller.fit")
    if "coefficients" not in fit:
        raise ScenarioError("propeller.fit.coefficients", "missing coefficient file")
    file = Path(fit["coefficients"])
    file = file if file.is_absolute() else base / file
    if not file.is_file():
        raise ScenarioError("propeller.fit.coefficients", f"file {file} does not exist")
    try:
        curves = read_wageningen_file(file)
        curve = curves[int(fit.get("geometry", 0))]
        result = fit_poly2(curve, constrain_linear_zero=bool(fit.get("reduced", True)), J_design=fit.get("J_design"))
    except (ConfigurationError, FitError, IndexError, ValueError) as exc:
        raise ScenarioError("propeller.fit", str(exc)) from exc
    extra = {k: section[k] for k in ("D_p", "f_w", "k_p", "rho") if k in section}
    try:
        return result.to_model(**extra)
    except (TypeError, ValueError) as exc:
        raise ScenarioError("propeller", str(exc)) from exc


def _parse_drivetrain(section: dict[str, Any]) -> DrivetrainModel:
    _check_keys(section, _field_names(DrivetrainModel) | {"n_EM_max_rad_s"}, "drivetrain")
    kwargs = dict(section)
    if "n_EM_max_rad_s" in kwargs:
        if "n_EM_max" in kwargs:
            raise ScenarioError("drivetrain.n_EM_max_rad_s", "give either n_EM_max or n_EM_max_rad_s, not both")
        kwargs["n_EM_max"] = float(kwargs.pop("n_EM_max_rad_s")) / (2.0 * math.pi)
    return _build(DrivetrainModel, kwargs, "drivetrain")


def _parse_battery(section: dict[str, Any]) -> BatteryModel:
    capacity_keys = {"E_max_Wh", "E0_Wh", "soc_min", "soc_max"}
    _check_keys(section, _field_names(BatteryModel) | capacity_keys, "battery")
    if "E_max_Wh" not in section:
        return _build(BatteryModel, section, "battery")
    if "E0_Wh" not in section:
        raise ScenarioError("battery.E0_Wh", "missing initial energy")
    if float(section["E0_Wh"]) > float(section["E_max_Wh"]):
        raise ScenarioError(
            "battery.E0_Wh",
            f"initial energy {section['E0_Wh']} Wh exceeds capacity {section['E_max_Wh']} Wh",
            "E0 <= E_max",
        )
    return _build(BatteryModel.from_capacity, section, "battery", None)


def _parse_solver(section: dict[str, Any]) -> SolverSettings:
    _check_keys(section, _field_names(SolverSettings), "solver")
    return _build(SolverSettings, section, "solver")


def _parse_output(section: dict[str, Any] | str, base: Path) -> Path:
    if isinstance(section, str):
        directory = section
    else:
        _check_keys(section, {"directory"}, "output")
        directory = section.get("directory", "out")
    path = Path(directory)
    return path if path.is_absolute() else base / path


def parse_scenario_dict(document: dict[str, Any], base: Path | None = None, name: str = "scenario") -> Scenario:
    """Validate an already-decoded scenario document.

    Relative file references resolve against ``base`` (the current directory by default).
    """
    base = base or Path.cwd()
    _check_keys(document, set(SECTIONS), "")
    for required in ("path", "vessel", "propeller", "drivetrain", "converter", "battery", "mission"):
        if required not in document:
            raise ScenarioError(required, "missing section")

    path_spec, seed = _parse_path(document["path"])
    _check_keys(document["converter"], _field_names(ConverterModel), "converter")
    _check_keys(document["mission"], _field_names(Mission), "mission")
    scenario = Scenario(
        name=str(document.get("name", name)),
        path=path_spec,
        vessel=_parse_vessel(document["vessel"]),
        prop=_parse_propeller(document["propeller"], base),
        drv=_parse_drivetrain(document["drivetrain"]),
        conv=_build(ConverterModel, document["converter"], "converter"),
        batt=_parse_battery(document["battery"]),
        mission=_build(Mission, document["mission"], "mission"),
        settings=_parse_solver(document.get("solver", {})),
        output=_parse_output(document.get("output", "out"), base),
        seed=seed,
    )
    logger.info(f"parsed scenario {scenario.name!r}: N={scenario.mission.N}, backend {scenario.settings.backend}")
    return scenario


def bundled_scenarios() -> tuple[str, ...]:
    root = resources.files("sailcone") / "scenarios"
    return tuple(sorted(item.name for item in root.iterdir() if item.name.endswith(".json")))


def resolve_scenario(file: str | Path) -> Path:
    """The file itself when it exists, otherwise the bundled scenario of that name."""
    path = Path(file)
    if path.is_file():
        return path
    bundled = resources.files("sailcone") / "scenarios" / path.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ScenarioError("", f"scenario {file} not found (bundled: {', '.join(bundled_scenarios())})")


def parse_scenario(file: str | Path) -> Scenario:
    """Read and validate a UTF-8 JSON scenario.

    Unknown keys are rejected, and every error names the offending field as a dotted path.
    Bundled names such as ``baseline.json`` resolve from package data when no such
    file exists.

    .. code-block:: python

        from sailcone import parse_scenario

        scenario = parse_scenario("baseline.json")
        scenario.prop.k_p  # 2
    """
    path = resolve_scenario(file)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"{path} is not valid JSON: {exc}") from exc
    scenario = parse_scenario_dict(document, base=path.parent, name=path.stem)
    return attrs.evolve(scenario, source=path)
