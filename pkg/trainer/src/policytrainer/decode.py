"""Heatmap peaks to grid actions, written against the published grid rules.

Cells are candidates when maximal over their 3x3 neighborhood with score at
least MIN_PEAK_SCORE; candidates are taken score-descending, ties broken
row-major, suppressing anything within NMS_RADIUS cells of an accepted peak.
The orientation class is the argmax of channels 1..3 at the peak cell. The
simulator side has its own copy of these rules; parity is pinned by fixture
tests, not by a shared import.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

HEATMAP_SIZE = 64
MIN_PEAK_SCORE = 0.05
NMS_RADIUS = 2.0


class Peak(NamedTuple):
    u: int
    v: int
    orientation: int
    score: float


def decode_grid(grid: np.ndarray, top_k: int) -> list[Peak]:
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    if grid.shape != (4, HEATMAP_SIZE, HEATMAP_SIZE):
        raise ValueError(f"expected a 4x{HEATMAP_SIZE}x{HEATMAP_SIZE} grid, got {grid.shape}")
    pos = np.asarray(grid[0], dtype=np.float64)
    padded = np.pad(pos, 1, constant_values=-np.inf)
    neighborhood = np.max(
        [
            padded[1 + dv : HEATMAP_SIZE + 1 + dv, 1 + du : HEATMAP_SIZE + 1 + du]
            for dv in (-1, 0, 1)
            for du in (-1, 0, 1)
        ],
        axis=0,
    )
    vs, us = np.nonzero((pos >= neighborhood) & (pos >= MIN_PEAK_SCORE))
    order = sorted(range(len(us)), key=lambda i: (-pos[vs[i], us[i]], vs[i], us[i]))
    peaks: list[Peak] = []
    for i in order:
        if len(peaks) == top_k:
            break
        u, v = int(us[i]), int(vs[i])
        if any((u - p.u) ** 2 + (v - p.v) ** 2 <= NMS_RADIUS**2 for p in peaks):
            continue
        orientation = int(np.argmax(grid[1:4, v, u]))
        peaks.append(Peak(u, v, orientation, float(pos[v, u])))
    return peaks
