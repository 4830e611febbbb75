"""Raw little-endian tensor blobs with JSON sidecars."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

_DTYPES = {"float32": "<f4", "uint8": "|u1"}


def save_array(path: str | Path, array: np.ndarray, meta: dict | None = None) -> None:
    path = Path(path)
    if array.dtype == np.float32:
        dtype = "float32"
    elif array.dtype == np.uint8:
        dtype = "uint8"
    else:
        raise ValueError(f"unsupported dtype {array.dtype}")
    blob = np.ascontiguousarray(array).astype(_DTYPES[dtype]).tobytes()
    path.write_bytes(blob)
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "shape": list(array.shape),
        "dtype": dtype,
        "order": "C",
    }
    if meta:
        sidecar.update(meta)
    Path(str(path) + ".json").write_text(json.dumps(sidecar, separators=(",", ":")) + "\n")


def load_array(path: str | Path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    dtype = _DTYPES[sidecar["dtype"]]
    array = np.frombuffer(path.read_bytes(), dtype=dtype).reshape(sidecar["shape"])
    return array.astype(sidecar["dtype"]), sidecar
