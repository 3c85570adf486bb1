"""Experiment configuration files (YAML) and the packaged presets."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import yaml

from . import presets
from .errors import ConfigError
from .rl.train import TrainConfig


class Mode(str, enum.Enum):
    SWEEP = "sweep"
    TRAIN = "train"
    DEPLOY = "deploy"
    COMPARE = "compare"
    CROSS_MODEL = "cross-model"


SCENARIO_KEYS = {"preset", "model", "iterations", "rounds", "noise"}
REPORT_KEYS = {"csv", "svg"}
# modes that consume a trained agent
NEEDS_CHECKPOINT = {Mode.DEPLOY, Mode.COMPARE, Mode.CROSS_MODEL}


@dataclass
class ScenarioRef:
    preset: str = "heterogeneity"
    model: str = "vgg5"
    iterations: int | None = None
    rounds: int | None = None
    noise: float | None = None

    def build(self, seed: int, model: str | None = None):
        kwargs = {k: v for k, v in (("iterations", self.iterations), ("rounds", self.rounds), ("noise", self.noise)) if v is not None}
        return presets.SCENARIOS[self.preset](model=model or self.model, seed=seed, **kwargs)


@dataclass
class ExperimentConfig:
    name: str
    mode: Mode
    scenario: ScenarioRef = field(default_factory=ScenarioRef)
    seeds: list = field(default_factory=lambda: [1, 2, 3, 4, 5])
    output_dir: str = "runs"
    csv: bool = True
    svg: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)
    # may contain "{seed}"; relative paths resolve against output_dir
    checkpoint: str | None = None
    target_model: str | None = None  # cross-model only
    models: list = field(default_factory=lambda: ["vgg5", "vgg8"])  # sweep only

    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.name

    def checkpoint_path(self, seed: int) -> Path:
        if self.checkpoint is None:
            raise ConfigError(f"{self.name}: mode {self.mode.value} needs a checkpoint")
        p = Path(self.checkpoint.format(seed=seed))
        return p if p.is_absolute() else Path(self.output_dir) / p

    def with_overrides(self, seeds=None, output_dir=None, checkpoint=None) -> "ExperimentConfig":
        cfg = self
        if seeds:
            cfg = replace(cfg, seeds=[int(s) for s in seeds])
        if output_dir:
            cfg = replace(cfg, output_dir=str(output_dir))
        if checkpoint:
            cfg = replace(cfg, checkpoint=str(checkpoint))
        return cfg


def _check_keys(section: str, data: dict, allowed) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    top = {f.name for f in fields(ExperimentConfig)} | {"reports"}
    _check_keys("config", data, top - {"csv", "svg"})
    for key in ("name", "mode"):
        if key not in data:
            raise ConfigError(f"missing required key {key!r}")
    try:
        mode = Mode(data["mode"])
    except ValueError:
        raise ConfigError(f"unknown mode {data['mode']!r}; expected one of {[m.value for m in Mode]}") from None

    scen = dict(data.get("scenario") or {})
    _check_keys("scenario", scen, SCENARIO_KEYS)
    scenario = ScenarioRef(**scen)
    if scenario.preset not in presets.SCENARIOS:
        raise ConfigError(f"unknown scenario preset {scenario.preset!r}; expected one of {sorted(presets.SCENARIOS)}")
    for m in [scenario.model, data.get("target_model"), *data.get("models", [])]:
        if m is not None and m not in presets.PROFILES:
            raise ConfigError(f"unknown model {m!r}; expected one of {sorted(presets.PROFILES)}")

    train_kw = dict(data.get("train") or {})
    _check_keys("train", train_kw, {f.name for f in fields(TrainConfig)})
    reports = dict(data.get("reports") or {})
    _check_keys("reports", reports, REPORT_KEYS)

    seeds = data.get("seeds", [1, 2, 3, 4, 5])
    if isinstance(seeds, int) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds must be a non-empty list of integers")

    cfg = ExperimentConfig(
        name=str(data["name"]),
        mode=mode,
        scenario=scenario,
        seeds=list(seeds),
        output_dir=str(data.get("output_dir", "runs")),
        csv=bool(reports.get("csv", True)),
        svg=bool(reports.get("svg", True)),
        train=TrainConfig(**train_kw),
        checkpoint=data.get("checkpoint"),
        target_model=data.get("target_model"),
        models=list(data.get("models", ["vgg5", "vgg8"])),
    )
    if mode in NEEDS_CHECKPOINT and not cfg.checkpoint:
        raise ConfigError(f"mode {mode.value} requires 'checkpoint'")
    if mode is Mode.CROSS_MODEL and not cfg.target_model:
        raise ConfigError("mode cross-model requires 'target_model'")
    if cfg.train.recluster not in ("every_round", "first_round"):
        raise ConfigError(f"train.recluster must be every_round or first_round, got {cfg.train.recluster!r}")
    if cfg.train.cluster_times not in ("initial", "latest"):
        raise ConfigError(f"train.cluster_times must be initial or latest, got {cfg.train.cluster_times!r}")
    return cfg


def preset_names() -> list[str]:
    root = resources.files("offload_rl") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_config(path_or_preset) -> ExperimentConfig:
    """Load a YAML file, or a packaged preset by bare name (see ``preset_names``)."""
    p = Path(path_or_preset)
    if p.is_file():
        text = p.read_text()
    else:
        res = resources.files("offload_rl") / "configs" / f"{path_or_preset}.yaml"
        if not res.is_file():
            raise ConfigError(f"no config file or preset named {str(path_or_preset)!r}; presets: {preset_names()}")
        text = res.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path_or_preset}: invalid YAML: {exc}") from exc
    return config_from_dict(data)
