"""YAML run-configuration loading and validation."""

import pytest
import yaml

from livsynth.config import ConfigError, load_run_config


def write(tmp_path, payload):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(payload))
    return path


BASE = {
    "evolution": {"algorithm": "ga", "population": 8, "generations": 2,
                  "depth": 4, "width": 16, "seed": 3},
    "task": {"name": "copy", "vocab": 32, "seq_len": 32, "batch": 2},
    "train": {"total_steps": 10, "warmup_steps": 2},
    "objectives": ["size", "cache"],
}


def test_full_config_round_trip(tmp_path):
    cfg = load_run_config(write(tmp_path, BASE))
    assert cfg.evolution.population == 8
    assert cfg.task.name == "copy"
    assert cfg.train.total_steps == 10
    assert [o.name for o in cfg.objectives] == ["size", "cache"]
    # dims default from the evolution width and the task shape
    assert cfg.dims.width == 16
    assert cfg.dims.vocab == 32
    assert cfg.dims.seq_len == 32


def test_empty_config_uses_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    cfg = load_run_config(path)
    assert cfg.evolution.algorithm == "ga"
    assert cfg.evolution.generations == 18
    assert [o.name for o in cfg.objectives] == ["quality", "cache"]


def test_objective_entries_may_carry_parameters(tmp_path):
    payload = dict(BASE, objectives=["size", {"name": "cache",
                                              "cache_seq_len": 1024,
                                              "bytes_per_element": 4}])
    cfg = load_run_config(write(tmp_path, payload))
    assert cfg.objectives[1].cache_seq_len == 1024
    assert cfg.objectives[1].bytes_per_element == 4


def test_unknown_top_level_key_is_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(write(tmp_path, dict(BASE, extra={"x": 1})))


def test_unknown_section_key_is_rejected(tmp_path):
    payload = dict(BASE, evolution=dict(BASE["evolution"], turbo=True))
    with pytest.raises(ConfigError):
        load_run_config(write(tmp_path, payload))


def test_invalid_section_value_is_rejected(tmp_path):
    payload = dict(BASE, evolution=dict(BASE["evolution"], population=7))
    with pytest.raises(ConfigError):
        load_run_config(write(tmp_path, payload))


def test_width_disagreement_is_rejected(tmp_path):
    payload = dict(BASE, dims={"width": 64})
    with pytest.raises(ConfigError):
        load_run_config(write(tmp_path, payload))


def test_vocab_smaller_than_task_is_rejected(tmp_path):
    payload = dict(BASE, dims={"width": 16, "vocab": 16})
    with pytest.raises(ConfigError):
        load_run_config(write(tmp_path, payload))


def test_objectives_must_be_a_list(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(write(tmp_path, dict(BASE, objectives="size")))
    with pytest.raises(ConfigError):
        load_run_config(write(tmp_path, dict(BASE, objectives=[])))
