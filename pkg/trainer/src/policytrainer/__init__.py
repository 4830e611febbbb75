"""Hourglass heatmap policy: D_pi training and closed-loop protocol client."""

from .config import TrainerConfig
from .decode import decode_grid
from .dpi import PolicyDataset, load_blob, read_index, save_blob
from .model import HourglassNet
from .train import load_checkpoint, train_policy

__all__ = [
    "TrainerConfig",
    "decode_grid",
    "PolicyDataset",
    "load_blob",
    "read_index",
    "save_blob",
    "HourglassNet",
    "load_checkpoint",
    "train_policy",
]
