"""Reader for demonstration directories of observation/heatmap pairs.

The directory format is an external contract: ``index.jsonl`` whose first
line is a header and whose remaining lines reference one raw tensor blob per
array, each with a JSON sidecar declaring shape and dtype. Nothing here
imports the simulator; the files are the whole interface.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import Dataset

SCHEMA_VERSION = 1
IMAGE_SIZE = 256
HEATMAP_SIZE = 64
PALETTE_CLASSES = 7
INPUT_CHANNELS = 1 + PALETTE_CLASSES

_DTYPES = {"float32": "<f4", "uint8": "|u1"}


class SchemaError(ValueError):
    pass


def save_blob(path: str | Path, array: np.ndarray) -> None:
    """Raw little-endian blob plus sidecar, matching the dataset contract."""
    if array.dtype == np.float32:
        dtype = "float32"
    elif array.dtype == np.uint8:
        dtype = "uint8"
    else:
        raise ValueError(f"unsupported dtype {array.dtype}")
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(array).astype(_DTYPES[dtype]).tobytes())
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "shape": list(array.shape),
        "dtype": dtype,
        "order": "C",
    }
    Path(str(path) + ".json").write_text(
        json.dumps(sidecar, separators=(",", ":")) + "\n"
    )


def load_blob(path: str | Path) -> np.ndarray:
    path = Path(path)
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    if sidecar.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported blob schema in {path}.json")
    dtype = sidecar.get("dtype")
    if dtype not in _DTYPES:
        raise SchemaError(f"unsupported dtype {dtype!r} in {path}.json")
    raw = np.frombuffer(path.read_bytes(), dtype=_DTYPES[dtype])
    return raw.reshape(sidecar["shape"]).astype(dtype)


def read_index(dpi_dir: str | Path) -> tuple[dict, list[dict]]:
    """Header and sample records, validated against the schema."""
    index = Path(dpi_dir, "index.jsonl")
    if not index.exists():
        raise SchemaError(f"{dpi_dir} has no index.jsonl")
    lines = index.read_text().splitlines()
    if not lines:
        raise SchemaError(f"{index} is empty")
    header = json.loads(lines[0])
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported index schema {header.get('schema_version')!r}"
        )
    records = []
    for n, line in enumerate(lines[1:], start=2):
        record = json.loads(line)
        missing = {"index", "phase", "depth", "seg", "heatmap"} - set(record)
        if missing:
            raise SchemaError(f"{index}:{n} misses fields {sorted(missing)}")
        if record["phase"] not in ("pick", "place"):
            raise SchemaError(f"{index}:{n} has unknown phase {record['phase']!r}")
        records.append(record)
    declared = header.get("samples")
    if declared is not None and declared != len(records):
        raise SchemaError(
            f"{index} declares {declared} samples but holds {len(records)}"
        )
    return header, records


def encode_input(depth: np.ndarray, seg: np.ndarray) -> np.ndarray:
    """Stack normalized depth with a one-hot segmentation, channels first."""
    if depth.shape != (IMAGE_SIZE, IMAGE_SIZE) or seg.shape != depth.shape:
        raise SchemaError(f"bad observation shapes {depth.shape} / {seg.shape}")
    planes = np.zeros((INPUT_CHANNELS, IMAGE_SIZE, IMAGE_SIZE), dtype=np.float32)
    d = depth.astype(np.float64)
    planes[0] = ((d - d.mean()) / (d.std() + 1e-6)).astype(np.float32)
    classes = np.clip(seg, 0, PALETTE_CLASSES - 1).astype(np.int64)
    onehot = np.eye(PALETTE_CLASSES, dtype=np.float32)[classes]
    planes[1:] = np.moveaxis(onehot, -1, 0)
    return planes


def drop_segmentation(
    seg: np.ndarray, p: float, rng: np.random.Generator
) -> np.ndarray:
    """Bernoulli pixel dropout: each labeled pixel falls back to background."""
    if p <= 0.0:
        return seg
    drop = (seg != 0) & (rng.random(seg.shape) < p)
    out = seg.copy()
    out[drop] = 0
    return out


class PolicyDataset(Dataset):
    """Lazy-loading torch dataset over one demonstration directory.

    Augmentation happens on the fly so every epoch sees fresh noise; the
    draw is seeded per (sample, epoch) and the epoch counter is advanced by
    the training loop, keeping runs reproducible.
    """

    def __init__(
        self, dpi_dir: str | Path, bernoulli_p: float = 0.0, seed: int = 0
    ) -> None:
        self.dir = Path(dpi_dir)
        self.header, self.records = read_index(dpi_dir)
        self.bernoulli_p = bernoulli_p
        self.seed = seed
        self.epoch = 0

    def __len__(self) -> int:
        return len(self.records)

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __getitem__(self, i: int):
        record = self.records[i]
        depth = load_blob(self.dir / record["depth"])
        seg = load_blob(self.dir / record["seg"])
        heatmap = load_blob(self.dir / record["heatmap"]).astype(np.float32)
        if heatmap.shape != (4, HEATMAP_SIZE, HEATMAP_SIZE):
            raise SchemaError(f"bad heatmap shape {heatmap.shape} in sample {i}")
        if self.bernoulli_p > 0.0:
            rng = np.random.default_rng(
                (self.seed, self.epoch, record["index"])
            )
            seg = drop_segmentation(seg, self.bernoulli_p, rng)
        x = torch.from_numpy(encode_input(depth, seg))
        y = torch.from_numpy(heatmap)
        return x, y
