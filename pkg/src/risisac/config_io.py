"""YAML experiment configuration with line-anchored validation errors.

Layout::

    profile: desk            # desk | paper, the base scenario
    scenario:                # overrides of ScenarioConfig fields
      total_power: 50.0
    experiment:
      kind: power_sweep      # required
      grid: {total_power: [40.0, 50.0]}
      schemes: [proposed, random_ris, no_ris]
      seeds: [0, 1, 2]
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .driver import SCHEMES, RunOptions
from .scenario import ScenarioConfig, desk_config, paper_config

KINDS = (
    "convergence", "power_sweep", "ris_position_sweep", "ris_count_sweep",
    "velocity_magnitude_sweep", "velocity_direction_sweep", "roc", "qos_tradeoff",
)
PROFILES = {"desk": desk_config, "paper": paper_config}
SWEEP_PARAMS = {
    "total_power", "a_max", "ris_y", "n_ris", "speed", "direction_deg", "qos_gamma_db",
    "clutter_reflectivity", "noise_power_radar",
}
TOP_KEYS = ("profile", "scenario", "experiment")


class ConfigError(ValueError):
    pass


class SpecError(ValueError):
    """Validation failure tied to one key (dotted path below ``experiment``)."""

    def __init__(self, key: str, msg: str):
        super().__init__(msg)
        self.key = key


@dataclass
class ExperimentSpec:
    kind: str
    grid: dict = field(default_factory=dict)
    schemes: list = field(default_factory=lambda: ["proposed"])
    seeds: list = field(default_factory=lambda: [0])
    output_dir: str = "results"
    n_noise: int = 200
    p_fa: list = field(default_factory=lambda: [1e-4])
    options: dict = field(default_factory=dict)
    name: str = ""

    def validate(self):
        if self.kind not in KINDS:
            raise SpecError("kind", f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.grid:
            raise SpecError("grid", "grid must contain at least one sweep parameter")
        for k, v in self.grid.items():
            if k not in SWEEP_PARAMS:
                raise SpecError(f"grid.{k}", f"unknown sweep parameter {k!r}")
            if not isinstance(v, list) or not v:
                raise SpecError(f"grid.{k}", f"grid entry {k!r} must be a nonempty list")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise SpecError("schemes", f"schemes must be a nonempty subset of {SCHEMES}, got {self.schemes}")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise SpecError("seeds", "seeds must be a nonempty list of distinct integers")
        if any(not isinstance(s, int) or s < 0 for s in self.seeds):
            raise SpecError("seeds", "seeds must be nonnegative integers")
        if self.n_noise < 1:
            raise SpecError("n_noise", "n_noise must be >= 1")
        if any(not 0 < p < 1 for p in self.p_fa):
            raise SpecError("p_fa", "p_fa values must lie in (0, 1)")
        known = {f.name for f in dataclasses.fields(RunOptions)}
        extra = set(self.options) - known
        if extra:
            raise SpecError(f"options.{sorted(extra)[0]}", f"unknown solver options {sorted(extra)}")

    def run_options(self) -> RunOptions:
        return RunOptions(**self.options)


@dataclass
class LoadedConfig:
    profile: str
    scenario_overrides: dict
    scenario: ScenarioConfig
    experiment: ExperimentSpec

    def to_dict(self) -> dict:
        exp = dataclasses.asdict(self.experiment)
        return {"profile": self.profile, "scenario": dict(self.scenario_overrides), "experiment": exp}


def _construct(node, path, lines):
    """Plain python value from a yaml node, recording the line of every key."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            if key in out:
                raise ConfigError(f"line {k.start_mark.line + 1}: duplicate key {key!r}")
            sub = f"{path}.{key}" if path else key
            lines[sub] = k.start_mark.line + 1
            out[key] = _construct(v, sub, lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return yaml.SafeLoader("").construct_object(node, deep=True)


def _err(lines, path, msg):
    line = lines.get(path)
    where = f"line {line}: " if line else ""
    return ConfigError(f"{where}{path}: {msg}")


def _coerce_numbers(d: dict) -> dict:
    # yaml reads 1e-4 as a string; accept it as a float
    out = {}
    for k, v in d.items():
        if isinstance(v, str):
            try:
                v = float(v)
            except ValueError:
                pass
        out[k] = v
    return out


def parse_config_text(text: str, profile_override: str | None = None) -> LoadedConfig:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML syntax error: {exc}") from None
    lines = {}
    data = _construct(root, "", lines) if root is not None else {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    for key in data:
        if key not in TOP_KEYS:
            raise _err(lines, key, f"unknown key {key!r}; allowed: {list(TOP_KEYS)}")
    if "experiment" not in data:
        raise ConfigError("missing required key 'experiment'")
    profile = profile_override or data.get("profile", "desk")
    if profile not in PROFILES:
        raise _err(lines, "profile", f"profile must be one of {sorted(PROFILES)}")

    overrides = data.get("scenario") or {}
    if not isinstance(overrides, dict):
        raise _err(lines, "scenario", "must be a mapping")
    names = {f.name for f in dataclasses.fields(ScenarioConfig)}
    for key in overrides:
        if key not in names:
            raise _err(lines, f"scenario.{key}", f"unknown scenario key {key!r}")
    overrides = _coerce_numbers(overrides)
    try:
        scenario = PROFILES[profile](**overrides)
    except (TypeError, ValueError) as exc:
        key = next((k for k in overrides if k in str(exc)), None)
        raise _err(lines, f"scenario.{key}" if key else "scenario", str(exc)) from None

    exp = data["experiment"]
    if not isinstance(exp, dict):
        raise _err(lines, "experiment", "must be a mapping")
    if "kind" not in exp:
        raise _err(lines, "experiment", "missing required key 'kind'")
    fields_ = {f.name for f in dataclasses.fields(ExperimentSpec)}
    for key in exp:
        if key not in fields_:
            raise _err(lines, f"experiment.{key}", f"unknown experiment key {key!r}")
    exp = dict(exp)
    if "p_fa" in exp:
        exp["p_fa"] = [float(v) for v in exp["p_fa"]]
    if "options" in exp:
        exp["options"] = _coerce_numbers(exp["options"] or {})
    spec = ExperimentSpec(**exp)
    try:
        spec.validate()
    except SpecError as exc:
        raise _err(lines, f"experiment.{exc.key}", str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise _err(lines, "experiment", str(exc)) from None
    return LoadedConfig(profile, overrides, scenario, spec)


def parse_config(path, profile_override: str | None = None) -> LoadedConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        return parse_config_text(p.read_text(encoding="utf-8"), profile_override)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from None


def serialize_config(cfg: LoadedConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
