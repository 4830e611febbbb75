"""Training configuration with validation and a stable content hash."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainerConfig:
    seed: int = 0
    lr: float = 2.5e-4
    epochs: int = 50
    batch: int = 8
    base_channels: int = 24
    val_frac: float = 0.1
    bernoulli_p: float = 0.0
    num_workers: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.val_frac < 1.0:
            raise ConfigError(f"val_frac must lie in [0, 1), got {self.val_frac}")
        if not 0.0 <= self.bernoulli_p < 1.0:
            raise ConfigError(f"bernoulli_p must lie in [0, 1), got {self.bernoulli_p}")
        for name in ("seed", "epochs", "batch", "base_channels", "num_workers"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
        if self.epochs < 1 or self.batch < 1 or self.base_channels < 1:
            raise ConfigError("epochs, batch and base_channels must be at least 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def config_from_dict(data: dict) -> TrainerConfig:
    known = {f.name for f in dataclasses.fields(TrainerConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return TrainerConfig(**data)


def load_config(path: str | Path) -> TrainerConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return config_from_dict(data)
