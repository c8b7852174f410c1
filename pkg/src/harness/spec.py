"""Experiment files: sectioned YAML parsed into validated models.

Sections are `scenario`, `solver`, `optimizer`, `experiment` and `logging`.
Scenario keys ending in `_dbm` are converted to the matching `_mw` field;
`noise_dbm` sets both noise powers, `min_rate` and `weight` broadcast to every
user. Every error is raised as ConfigError carrying the YAML line.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.errors import ConfigError, GuardrailError
from src.metrics.types import Scheme
from src.optimization.settings import OptimizerSettings, SolverSettings
from src.scenario.channels import scenario_with_irs_center
from src.scenario.config import SystemConfig, dbm_to_mw
from src.solver.program import MAX_REAL_DIMENSION

logger = logging.getLogger(__name__)

ExperimentKind = Literal[
    "convergence", "sweep_elements", "sweep_irs_x", "sweep_pmax_ee", "sweep_pmax_rate"
]
PROPOSED_SCHEMES = ("EIA", "OIA")
BASELINE_SCHEMES = ("RandomBeamforming", "RandomPhase", "NoIrs")
SECTIONS = ("scenario", "solver", "optimizer", "experiment", "logging")
LOGGING_KEYS = ("level", "format")
SCENARIO_ALIASES = {
    "min_rate": ("min_rates",),
    "weight": ("weights",),
    "noise_dbm": ("noise_sigma_mw", "noise_delta_mw"),
}

KeyLines = Dict[Tuple[str, ...], int]


class ExperimentSpec(BaseModel):
    """
    What to run and where to write it.

    The grid holds p_max in dBm for the convergence and p_max sweeps, L for
    sweep_elements and the IRS-center x-coordinate (m) for sweep_irs_x.
    Baselines run once per pipeline listed in baseline_pipelines.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: ExperimentKind = "convergence"
    schemes: Tuple[str, ...] = Field(("EIA", "OIA"), min_length=1)
    baseline_pipelines: Tuple[Scheme, ...] = Field((Scheme.EIA,), min_length=1)
    grid: Tuple[float, ...] = Field((34.0,), min_length=1)
    seeds: Tuple[int, ...] = Field((0,), min_length=1)
    output_dir: str = "data/results"

    @field_validator("schemes")
    @classmethod
    def _known_schemes(cls, value: Tuple[str, ...]) -> Tuple[str, ...]:
        unknown = [name for name in value if name not in PROPOSED_SCHEMES + BASELINE_SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes {unknown}")
        return value


@dataclass
class ParsedConfig:
    """Everything an experiment file configures."""

    system: SystemConfig
    solver: SolverSettings
    optimizer: OptimizerSettings
    experiment: ExperimentSpec
    log_settings: Dict[str, str] = field(default_factory=dict)
    lines: KeyLines = field(default_factory=dict)


def _key_lines(text: str) -> KeyLines:
    """1-based line of every top-level and section-level key."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"Malformed YAML: {e}", line=mark.line + 1 if mark else None)
    lines: KeyLines = {}
    if root is None:
        return lines
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError("Top level must be a mapping of sections", line=root.start_mark.line + 1)
    for key_node, value_node in root.value:
        lines[(key_node.value,)] = key_node.start_mark.line + 1
        if isinstance(value_node, yaml.MappingNode):
            for sub_key, _ in value_node.value:
                lines[(key_node.value, sub_key.value)] = sub_key.start_mark.line + 1
    return lines


def _to_mw(value: Any, key: str, line: Optional[int]) -> Any:
    try:
        if isinstance(value, (list, tuple)):
            return [dbm_to_mw(float(item)) for item in value]
        return dbm_to_mw(float(value))
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be numeric, got {value!r}", line=line)


def _scenario_params(raw: Dict[str, Any], lines: KeyLines) -> tuple[dict, dict]:
    """Map file keys to SystemConfig fields; returns (params, field -> file key)."""
    params: Dict[str, Any] = {}
    sources: Dict[str, str] = {}
    for key, value in raw.items():
        line = lines.get(("scenario", key))
        if key in SCENARIO_ALIASES:
            targets = SCENARIO_ALIASES[key]
            if key == "noise_dbm":
                value = _to_mw(value, key, line)
        elif key.endswith("_dbm"):
            targets = (key[: -len("_dbm")] + "_mw",)
            value = _to_mw(value, key, line)
        else:
            targets = (key,)
        for target in targets:
            if target not in SystemConfig.model_fields:
                raise ConfigError(f"Unknown scenario key: {key}", line=line)
            if isinstance(value, list):
                value = tuple(value)
            params[target] = value
            sources[target] = key
    return params, sources


def _validate(model: type, params: dict, section: str, lines: KeyLines, sources=None):
    """Build a pydantic model, turning ValidationError into ConfigError with a line."""
    try:
        return model(**params)
    except ValidationError as e:
        error = e.errors()[0]
        loc = error.get("loc") or ()
        key = str(loc[0]) if loc else None
        if sources and key in sources:
            key = sources[key]
        line = lines.get((section, key)) if key else lines.get((section,))
        label = f"{section}.{key}" if key else section
        raise ConfigError(f"{label}: {error['msg']}", line=line)


def _section(data: Dict[str, Any], name: str, lines: KeyLines) -> Dict[str, Any]:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"Section {name} must be a mapping", line=lines.get((name,)))
    return value


def apply_sweep(kind: str, config: SystemConfig, value: float) -> SystemConfig:
    """Scenario parameters at one grid point."""
    if kind == "sweep_elements":
        if float(value) != int(value):
            raise ValueError(f"elements_per_irs must be an integer, got {value}")
        return config.with_updates(elements_per_irs=int(value))
    if kind == "sweep_irs_x":
        return scenario_with_irs_center(config, value)
    return config.with_updates(p_max_mw=dbm_to_mw(value))


def check_guardrails(
    spec: ExperimentSpec,
    config: SystemConfig,
    lines: Optional[KeyLines] = None,
) -> None:
    """
    Reject grids the dense solver cannot handle, before anything runs.

    Raises:
        GuardrailError: a phase or beamforming block is too large
        ConfigError: a grid value is invalid for the scenario
    """
    line = (lines or {}).get(("experiment", "grid"))
    for value in spec.grid:
        try:
            swept = apply_sweep(spec.experiment, config, value)
        except ValueError as e:
            raise ConfigError(f"experiment.grid value {value}: {e}", line=line)
        phase_dim = 2 * (swept.num_elements + 1)
        beam_dim = 2 * swept.num_antennas
        if max(phase_dim, beam_dim) > MAX_REAL_DIMENSION:
            raise GuardrailError(
                f"Grid value {value} needs a {max(phase_dim, beam_dim)}-dimensional block, "
                f"above the {MAX_REAL_DIMENSION} limit",
                line=line,
            )


def parse_text(text: str) -> ParsedConfig:
    """Parse experiment YAML from a string (see parse_config)."""
    lines = _key_lines(text)
    data = yaml.safe_load(text) or {}

    for name in data:
        if name not in SECTIONS:
            raise ConfigError(f"Unknown section: {name}", line=lines.get((name,)))

    params, sources = _scenario_params(_section(data, "scenario", lines), lines)
    system = _validate(SystemConfig, params, "scenario", lines, sources)
    solver = _validate(SolverSettings, _section(data, "solver", lines), "solver", lines)
    optimizer = _validate(
        OptimizerSettings, _section(data, "optimizer", lines), "optimizer", lines
    )
    experiment = _validate(
        ExperimentSpec, _section(data, "experiment", lines), "experiment", lines
    )

    logging_section = _section(data, "logging", lines)
    for key in logging_section:
        if key not in LOGGING_KEYS:
            raise ConfigError(f"Unknown logging key: {key}", line=lines.get(("logging", key)))

    check_guardrails(experiment, system, lines)
    return ParsedConfig(
        system=system,
        solver=solver,
        optimizer=optimizer,
        experiment=experiment,
        log_settings={key: str(value) for key, value in logging_section.items()},
        lines=lines,
    )


def parse_config(path: str | Path) -> ParsedConfig:
    """
    Load and validate an experiment file.

    Missing sections or keys take the full-scale reference defaults.

    Args:
        path: YAML file

    Returns:
        ParsedConfig

    Raises:
        ConfigError: malformed file, unknown key or out-of-range value
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        logger.error(f"Cannot read config {path}: {e}")
        raise ConfigError(f"Cannot read config {path}: {e}")
    parsed = parse_text(text)
    logger.info(
        f"Loaded {path}: {parsed.experiment.experiment} over {len(parsed.experiment.grid)} "
        f"grid values and {len(parsed.experiment.seeds)} seeds"
    )
    return parsed
