"""Training loop: Adam on MSE between predicted and target heatmaps."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader, Subset

from .config import TrainerConfig
from .decode import decode_grid
from .dpi import PolicyDataset


class DivergedError(RuntimeError):
    pass


def _split(n: int, val_frac: float, seed: int) -> tuple[list[int], list[int]]:
    order = np.random.default_rng(seed).permutation(n)
    n_val = int(round(n * val_frac))
    return list(order[n_val:]), list(order[:n_val])


def _run_epoch(net, loader, optimizer=None) -> float:
    losses = []
    for x, y in loader:
        pred = net(x)
        loss = torch.mean((pred - y) ** 2)
        if not torch.isfinite(loss):
            raise DivergedError("loss is not finite")
        if optimizer is not None:
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        losses.append(float(loss.detach()))
    return float(np.mean(losses)) if losses else float("nan")


def _topk_within_one_cell(pred: np.ndarray, target: np.ndarray) -> bool:
    got = decode_grid(np.clip(pred, 0.0, 1.0), 1)
    want = decode_grid(target, 1)
    if not want:
        return not got
    if not got:
        return False
    return abs(got[0].u - want[0].u) <= 1 and abs(got[0].v - want[0].v) <= 1


def validate_decode(net, dataset, indices) -> float:
    """Fraction of samples whose predicted top-1 cell lands within one cell
    of the target top-1."""
    if not indices:
        return float("nan")
    net.eval()
    hits = 0
    with torch.no_grad():
        for i in indices:
            x, y = dataset[i]
            pred = net(x[None]).numpy()[0]
            if _topk_within_one_cell(pred, y.numpy()):
                hits += 1
    return hits / len(indices)


def train_policy(
    dpi_dir: str | Path,
    cfg: TrainerConfig,
    out_dir: str | Path,
    net: torch.nn.Module | None = None,
) -> dict:
    """Trains on one demonstration directory; writes checkpoint + curves.

    Returns the metrics dict that is also saved as ``metrics.json``. The
    checkpoint stores weights and config so evaluation can rebuild the net
    without the training data present.
    """
    from .model import HourglassNet

    torch.manual_seed(cfg.seed)
    torch.set_num_threads(max(1, torch.get_num_threads()))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = PolicyDataset(dpi_dir, bernoulli_p=cfg.bernoulli_p, seed=cfg.seed)
    train_idx, val_idx = _split(len(dataset), cfg.val_frac, cfg.seed)
    if not train_idx:
        raise DivergedError("no training samples after the validation split")
    if net is None:
        net = HourglassNet(cfg.base_channels)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    generator = torch.Generator().manual_seed(cfg.seed)
    loader = DataLoader(
        Subset(dataset, train_idx),
        batch_size=cfg.batch,
        shuffle=True,
        generator=generator,
        num_workers=cfg.num_workers,
    )
    curves = []
    for epoch in range(cfg.epochs):
        dataset.set_epoch(epoch)
        net.train()
        train_loss = _run_epoch(net, loader, optimizer)
        curves.append({"epoch": epoch, "train_mse": train_loss})
    dataset.set_epoch(cfg.epochs)
    val_hit = validate_decode(net, dataset, val_idx)
    metrics = {
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "samples": len(dataset),
        "train_samples": len(train_idx),
        "val_samples": len(val_idx),
        "final_train_mse": curves[-1]["train_mse"],
        "val_top1_within_one_cell": val_hit,
        "curves": curves,
    }
    torch.save(
        {
            "state_dict": net.state_dict(),
            "config": cfg.to_dict(),
            "format_version": 1,
        },
        out / "policy.pt",
    )
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True))
    return metrics


def load_checkpoint(path: str | Path) -> tuple[torch.nn.Module, TrainerConfig]:
    from .config import config_from_dict
    from .model import HourglassNet

    payload = torch.load(path, map_location="cpu", weights_only=True)
    cfg = config_from_dict(payload["config"])
    net = HourglassNet(cfg.base_channels)
    net.load_state_dict(payload["state_dict"])
    net.eval()
    return net, cfg
