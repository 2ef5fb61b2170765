"""YAML run configuration with strict key validation."""

from __future__ import annotations

from dataclasses import dataclass, fields

import yaml

from .evolve import EvolutionConfig
from .fitness import ObjectiveSpec, TaskSpec
from .model import ModelDims
from .optim import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    evolution: EvolutionConfig
    task: TaskSpec
    train: TrainConfig
    dims: ModelDims
    objectives: tuple[ObjectiveSpec, ...]


def _build(cls, mapping: dict, section: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {sorted(unknown)}")
    try:
        return cls(**mapping)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{section}' section: {exc}") from exc


def _coerce_objectives(raw) -> tuple[ObjectiveSpec, ...]:
    if raw is None:
        raw = ["quality", "cache"]
    if not isinstance(raw, list) or not raw:
        raise ConfigError("'objectives' must be a non-empty list")
    specs = []
    for item in raw:
        if isinstance(item, str):
            item = {"name": item}
        if not isinstance(item, dict):
            raise ConfigError(f"objective entry {item!r} must be a name or mapping")
        specs.append(_build(ObjectiveSpec, item, "objectives"))
    return tuple(specs)


def load_run_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a mapping")
    known = {"evolution", "task", "train", "dims", "objectives"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")

    evo = _build(EvolutionConfig, dict(raw.get("evolution") or {}), "evolution")
    task = _build(TaskSpec, dict(raw.get("task") or {"name": "copy"}), "task")
    train = _build(TrainConfig, dict(raw.get("train") or {}), "train")
    dims_raw = dict(raw.get("dims") or {})
    dims_raw.setdefault("width", evo.width)
    dims_raw.setdefault("vocab", task.vocab)
    dims_raw.setdefault("seq_len", task.seq_len)
    dims = _build(ModelDims, dims_raw, "dims")
    if dims.width != evo.width:
        raise ConfigError(
            f"dims.width {dims.width} disagrees with evolution.width {evo.width}")
    if dims.vocab < task.vocab:
        raise ConfigError(
            f"dims.vocab {dims.vocab} is smaller than task.vocab {task.vocab}")
    objectives = _coerce_objectives(raw.get("objectives"))
    return RunConfig(evo, task, train, dims, objectives)
