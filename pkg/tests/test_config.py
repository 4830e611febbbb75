"""Configuration schema, canonical hashing and file round trips."""

from __future__ import annotations

import dataclasses
import json

import pytest

from blockassembly.config import (
    CONFIG_SCHEMA_VERSION,
    ConfigError,
    ExperimentConfig,
    artifact_header,
    config_from_dict,
    load_config,
    save_config,
)


def test_defaults_are_valid():
    cfg = ExperimentConfig()
    assert cfg.task == "arch"
    assert cfg.heights == (3,)
    assert 0.0 < cfg.gamma < 1.0


def test_rejects_bad_fields():
    with pytest.raises(ConfigError):
        ExperimentConfig(task="pyramid")
    with pytest.raises(ConfigError):
        ExperimentConfig(heights=(2,))
    with pytest.raises(ConfigError):
        ExperimentConfig(heights=())
    with pytest.raises(ConfigError):
        ExperimentConfig(gamma=1.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(policy_frac=1.5)
    with pytest.raises(ConfigError):
        ExperimentConfig(rounds=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(max_env_steps=-1)


def test_hash_stable_and_sensitive():
    a = ExperimentConfig()
    b = ExperimentConfig()
    c = ExperimentConfig(seed=1)
    assert a.hash() == b.hash()
    assert a.hash() != c.hash()
    assert len(a.hash()) == 16


def test_dict_round_trip():
    cfg = ExperimentConfig(task="tower", tower_height=5, heights=(4, 5), gamma=0.9)
    again = config_from_dict(cfg.to_dict())
    assert again == cfg
    assert again.heights == (4, 5)


def test_unknown_keys_rejected():
    data = ExperimentConfig().to_dict()
    data["episodes_per_cell"] = 10
    with pytest.raises(ConfigError) as err:
        config_from_dict(data)
    assert "episodes_per_cell" in str(err.value)


def test_schema_version_checked():
    data = ExperimentConfig().to_dict()
    data["schema_version"] = CONFIG_SCHEMA_VERSION + 1
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_file_round_trip(tmp_path):
    cfg = ExperimentConfig(min_pairs=25_000, lr_final=2e-4)
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    assert load_config(path) == cfg
    # the file itself is canonical: saving again is byte-identical
    blob = path.read_bytes()
    save_config(load_config(path), path)
    assert path.read_bytes() == blob


def test_load_rejects_non_object(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("[1, 2, 3]")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_artifact_header_contents():
    cfg = ExperimentConfig(seed=4)
    head = artifact_header(cfg)
    assert head == {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "config_hash": cfg.hash(),
        "seed": 4,
    }
    assert artifact_header(cfg, seed=9)["seed"] == 9


def test_frozen():
    cfg = ExperimentConfig()
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.seed = 3


def test_replace_revalidates():
    cfg = ExperimentConfig()
    with pytest.raises(ConfigError):
        dataclasses.replace(cfg, gamma=-0.2)


def test_to_dict_is_json_ready():
    text = json.dumps(ExperimentConfig().to_dict(), sort_keys=True)
    assert "heights" in text and "schema_version" in text
