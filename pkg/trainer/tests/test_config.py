"""Trainer configuration validation and hashing."""

from __future__ import annotations

import json

import pytest

from policytrainer.config import ConfigError, TrainerConfig, config_from_dict, load_config


def test_defaults_are_valid():
    cfg = TrainerConfig()
    assert cfg.lr == 2.5e-4
    assert cfg.batch == 8


def test_rejects_bad_values():
    for kwargs in ({"lr": 0.0}, {"epochs": 0}, {"batch": -1}, {"val_frac": 1.5}, {"bernoulli_p": -0.1}):
        with pytest.raises(ConfigError):
            TrainerConfig(**kwargs)


def test_digest_tracks_content():
    a = TrainerConfig()
    b = TrainerConfig(lr=1e-3)
    assert a.digest() == TrainerConfig().digest()
    assert a.digest() != b.digest()
    assert len(a.digest()) == 16


def test_dict_round_trip_and_unknown_keys():
    cfg = TrainerConfig(epochs=7, base_channels=12)
    again = config_from_dict(cfg.to_dict())
    assert again == cfg
    with pytest.raises(ConfigError):
        config_from_dict({"epochs": 7, "warp_speed": True})


def test_load_config_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 3, "epochs": 2}))
    cfg = load_config(path)
    assert cfg.seed == 3 and cfg.epochs == 2
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)
