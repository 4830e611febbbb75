"""Fixed-width vector encoding of world states for the value network.

Nine primitive slots of twelve features each, plus nine presence bits.
Structure primitives come first, sorted by quantized (z, x, y); loose
primitives follow, sorted by (length, color), with their table positions and
orientations erased. Two states that differ only in where loose pieces lie
therefore encode to bit-identical vectors.
"""

from __future__ import annotations

import numpy as np

from .world import (
    GRID_CELLS,
    MAX_PRIMITIVES,
    WORKSPACE_HEIGHT,
    WorldState,
    color_index,
    orientation_index,
)

FEATURES_PER_SLOT = 12
ENCODING_DIM = MAX_PRIMITIVES * FEATURES_PER_SLOT + MAX_PRIMITIVES


def _q(x: float) -> float:
    return round(x, 2) + 0.0


def encode_state(state: WorldState) -> np.ndarray:
    structure = [p for p in state.primitives if not state.is_loose(p)]
    loose = [p for p in state.primitives if state.is_loose(p)]
    structure.sort(
        key=lambda p: (_q(p.position[2]), _q(p.position[0]), _q(p.position[1]))
    )
    loose.sort(key=lambda p: (p.length, color_index(p.color)))
    vec = np.zeros(ENCODING_DIM, dtype=np.float64)
    for slot, piece in enumerate(structure + loose):
        base = slot * FEATURES_PER_SLOT
        if slot < len(structure):
            x, y, z = (_q(c) for c in piece.position)
            orient = orientation_index(piece.orientation)
        else:
            x = y = z = 0.0
            orient = 0
        vec[base + 0] = x / GRID_CELLS
        vec[base + 1] = y / GRID_CELLS
        vec[base + 2] = z / WORKSPACE_HEIGHT
        vec[base + 3 + orient] = 1.0
        vec[base + 6 : base + 9] = piece.color
        vec[base + 9 : base + 12] = np.asarray(piece.extents) / 3.0
        vec[MAX_PRIMITIVES * FEATURES_PER_SLOT + slot] = 1.0
    return vec


def encode_batch(states: list[WorldState]) -> np.ndarray:
    if not states:
        return np.zeros((0, ENCODING_DIM), dtype=np.float64)
    return np.stack([encode_state(s) for s in states])
