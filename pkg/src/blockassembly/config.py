"""Experiment configuration: a strict JSON schema with a canonical hash.

Every artifact the command line writes embeds the hash of the configuration
that produced it, so runs are reproducible byte for byte from (config, seed).
Unknown keys are rejected rather than ignored; a silently misspelled field
would otherwise change nothing while claiming it did.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

CONFIG_SCHEMA_VERSION = 1

TASKS = ("arch", "tower", "multi-height")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "arch"
    heights: tuple[int, ...] = (3,)
    tower_height: int = 3
    seed: int = 0
    gamma: float = 0.8
    rounds: int = 5
    min_pairs: int = 20_000
    epochs: int = 30
    lr: float = 1e-3
    lr_final: float | None = None
    batch: int = 256
    hidden: int = 128
    expansions_per_state: int = 2
    policy_frac: float = 0.5
    episodes: int = 200
    max_env_steps: int = 4000
    mcts_simulations: int = 50
    mcts_uct_c: float = 1.4
    mcts_rollout_depth: int = 8
    paths_per_instance: int = 8
    perturbations_per_state: int = 2
    bernoulli_p: float = 0.0
    extent_noise: float = 0.0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.heights or any(h not in (3, 4, 5) for h in self.heights):
            raise ConfigError(f"heights must be drawn from 3..5, got {self.heights}")
        if self.tower_height < 1 or self.tower_height > 8:
            raise ConfigError(f"tower height out of range: {self.tower_height}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0.0 <= self.policy_frac <= 1.0:
            raise ConfigError(f"policy_frac must lie in [0, 1], got {self.policy_frac}")
        if not 0.0 <= self.bernoulli_p < 1.0:
            raise ConfigError(f"bernoulli_p must lie in [0, 1), got {self.bernoulli_p}")
        for name in (
            "rounds",
            "min_pairs",
            "epochs",
            "batch",
            "hidden",
            "episodes",
            "mcts_simulations",
            "paths_per_instance",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("max_env_steps", "expansions_per_state", "perturbations_per_state"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must not be negative")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["heights"] = list(self.heights)
        data["schema_version"] = CONFIG_SCHEMA_VERSION
        return data

    def hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    version = data.pop("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema version {version}")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "heights" in data:
        data["heights"] = tuple(data["heights"])
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"
    )


def artifact_header(cfg: ExperimentConfig, seed: int | None = None) -> dict:
    return {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "config_hash": cfg.hash(),
        "seed": cfg.seed if seed is None else seed,
    }
