"""Shared builders for test scenes."""

from __future__ import annotations

import numpy as np

from blockassembly.scenes import sample_primitive_set, scatter_pieces
from blockassembly.world import (
    COLOR_BY_NAME,
    DEFAULT_WORKSPACE,
    Primitive,
    WorldState,
    Workspace,
    sample_action,
    apply_action,
)

GREEN = COLOR_BY_NAME["green"]
YELLOW = COLOR_BY_NAME["yellow"]
RED = COLOR_BY_NAME["red"]
BLUE = COLOR_BY_NAME["blue"]
GREY = COLOR_BY_NAME["grey"]


def cube_at(pid: int, cell: tuple[int, int], level: int = 0, color=GREEN) -> Primitive:
    i, j = cell
    return Primitive(pid, (1.0, 1.0, 1.0), color, (i + 0.5, j + 0.5, level + 0.5))


def standing(pid: int, length: float, cell: tuple[int, int], z_bottom: float = 0.0, color=BLUE) -> Primitive:
    i, j = cell
    return Primitive(
        pid, (length, 1.0, 1.0), color, (i + 0.5, j + 0.5, z_bottom + length / 2), "along_z"
    )


def lying(pid: int, length: float, cell: tuple[int, int], color=GREY) -> Primitive:
    i, j = cell
    return Primitive(pid, (length, 1.0, 1.0), color, (i + length / 2, j + 0.5, 0.5), "along_x")


def bar_at(pid: int, workspace: Workspace, z_bottom: float, color=GREY) -> Primitive:
    bx, by = workspace.bridge_center()
    return Primitive(pid, (3.0, 1.0, 1.0), color, (bx, by, z_bottom + 0.5), "along_x")


def small_arch(workspace: Workspace = DEFAULT_WORKSPACE) -> WorldState:
    """3U arch from two standing 2U beams and a bar."""
    (l, r) = workspace.anchors
    return WorldState(
        (standing(0, 2.0, l), standing(1, 2.0, r), bar_at(2, workspace, 2.0)), workspace
    )


def random_messy_state(seed: int, steps: int = 4) -> WorldState:
    """A reachable state: scattered sampled set plus a few random actions."""
    rng = np.random.default_rng(seed)
    pieces = sample_primitive_set(rng)
    state = scatter_pieces(pieces, DEFAULT_WORKSPACE, rng)
    for _ in range(steps):
        action = sample_action(state, rng)
        if action is None:
            break
        state = apply_action(state, action)
    return state
