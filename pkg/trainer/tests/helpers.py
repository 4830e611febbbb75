"""Shared builders for trainer tests: synthetic demo dirs and blob grids."""

from __future__ import annotations

import json

import numpy as np

from policytrainer.dpi import save_blob


def gaussian_blob(grid, u, v, orientation, sigma=1.5, amp=1.0):
    ys, xs = np.mgrid[0:64, 0:64]
    bump = amp * np.exp(-((xs - u) ** 2 + (ys - v) ** 2) / (2 * sigma**2))
    grid[0] = np.maximum(grid[0], bump)
    grid[1 + orientation] = np.maximum(grid[1 + orientation], bump)
    return grid


def write_sample_dir(path, n=3, image=256, heatmap=64, header_extra=None, seed=0):
    """A minimal, schema-valid demonstration directory with random tensors."""
    rng = np.random.default_rng(seed)
    lines = []
    head = {"schema_version": 1, "samples": n}
    if header_extra:
        head.update(header_extra)
    lines.append(json.dumps(head))
    for i in range(n):
        depth = rng.uniform(0.5, 1.2, size=(image, image)).astype(np.float32)
        seg = rng.integers(0, 7, size=(image, image)).astype(np.uint8)
        hm = np.zeros((4, heatmap, heatmap), dtype=np.float32)
        u, v = 10 + int(rng.integers(40)), 10 + int(rng.integers(40))
        gaussian_blob(hm, u, v, i % 3)
        names = {}
        for key, arr in (("depth", depth), ("seg", seg), ("heatmap", hm)):
            name = f"s{i:03d}_{key}.bin"
            save_blob(path / name, arr)
            names[key] = name
        lines.append(
            json.dumps(
                {
                    "index": i,
                    "phase": "pick" if i % 2 == 0 else "place",
                    "depth": names["depth"],
                    "seg": names["seg"],
                    "heatmap": names["heatmap"],
                    "meta": {"entry": i},
                }
            )
        )
    (path / "index.jsonl").write_text("\n".join(lines) + "\n")
    return path
