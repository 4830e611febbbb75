"""Scene builders: assembled instances, scattered initial states, sampled sets."""

from __future__ import annotations

import numpy as np

from .shapes import ArchSpec, CategoryInstance, TowerSpec, enumerate_category, tower_color
from .world import (
    PALETTE,
    PRIMITIVE_COLORS,
    Primitive,
    WorldError,
    WorldState,
    Workspace,
    color_index,
    free_loose_cells,
    lying_pose,
)


class UnbuildableSet(WorldError):
    """Raised when a sampled primitive set cannot realize any instance."""


def materialize_pieces(
    instance: CategoryInstance, rng: np.random.Generator | None = None
) -> list[tuple[float, tuple[float, float, float]]]:
    """(length, color) pairs for the instance's slots. Free-color slots cycle

    through the palette, or draw from ``rng`` when given.
    """
    pieces = []
    for i, t in enumerate(instance.targets):
        if t.color is not None:
            color = PALETTE[t.color][1]
        elif rng is not None:
            color = PRIMITIVE_COLORS[int(rng.integers(len(PRIMITIVE_COLORS)))]
        else:
            color = PRIMITIVE_COLORS[i % len(PRIMITIVE_COLORS)]
        pieces.append((t.length, color))
    return pieces


def assembled_state(
    instance: CategoryInstance,
    workspace: Workspace,
    rng: np.random.Generator | None = None,
) -> WorldState:
    """The instance standing assembled, ids numbered in target order."""
    pieces = materialize_pieces(instance, rng)
    prims = tuple(
        Primitive(i, (length, 1.0, 1.0), color, t.position, t.orientation)
        for i, ((length, color), t) in enumerate(zip(pieces, instance.targets))
    )
    return WorldState(prims, workspace)


def scatter_pieces(
    pieces: list[tuple[float, tuple[float, float, float]]],
    workspace: Workspace,
    rng: np.random.Generator,
    ids: list[int] | None = None,
) -> WorldState:
    """Lay the pieces flat at random free cells outside the anchor region."""
    state = WorldState((), workspace)
    if ids is None:
        ids = list(range(len(pieces)))
    for pid, (length, color) in zip(ids, pieces):
        cells = free_loose_cells(state, length)
        if not cells:
            raise WorldError("no free table cells left to scatter onto")
        cell = cells[int(rng.integers(len(cells)))]
        piece = Primitive(pid, (length, 1.0, 1.0), color, lying_pose(cell, length))
        state = WorldState(state.primitives + (piece,), workspace, validate=False)
    return state


def scattered_instance(
    instance: CategoryInstance, workspace: Workspace, rng: np.random.Generator
) -> WorldState:
    return scatter_pieces(materialize_pieces(instance, rng), workspace, rng)


def sample_primitive_set(
    rng: np.random.Generator, min_pieces: int = 3, max_pieces: int = 8
) -> list[tuple[float, tuple[float, float, float]]]:
    """Uniform piece-count multiset with cube-heavy lengths and at least one

    3 U beam (nothing spans the anchors without one).
    """
    n = int(rng.integers(min_pieces, max_pieces + 1))
    lengths = [float(rng.choice((1.0, 2.0, 3.0), p=(0.5, 0.25, 0.25))) for _ in range(n)]
    if 3.0 not in lengths:
        lengths[-1] = 3.0
    return [
        (length, PRIMITIVE_COLORS[int(rng.integers(len(PRIMITIVE_COLORS)))])
        for length in lengths
    ]


def buildable_instances(
    spec: ArchSpec | TowerSpec, pieces: list[tuple[float, tuple[float, float, float]]]
) -> list[CategoryInstance]:
    """Instances whose slots can all be filled from the given pieces."""
    out = []
    for instance in enumerate_category(spec):
        have = sorted((length, color_index(color)) for length, color in pieces)
        ok = True
        for t in sorted(instance.targets, key=lambda t: (t.color is None, t.length)):
            hit = None
            for i, (length, color) in enumerate(have):
                if length == t.length and (t.color is None or color == t.color):
                    hit = i
                    break
            if hit is None:
                ok = False
                break
            have.pop(hit)
        if ok:
            out.append(instance)
    return out


def sample_buildable_set(
    spec: ArchSpec | TowerSpec,
    rng: np.random.Generator,
    max_resamples: int = 200,
) -> tuple[list[tuple[float, tuple[float, float, float]]], int]:
    """Sample sets until one can build some instance; returns (set, resamples)."""
    for attempt in range(max_resamples):
        pieces = sample_primitive_set(rng)
        if buildable_instances(spec, pieces):
            return pieces, attempt
    raise UnbuildableSet(f"no buildable set after {max_resamples} draws")


def tower_scene_pieces(
    spec: TowerSpec, rng: np.random.Generator, distractors: int = 0
) -> list[tuple[float, tuple[float, float, float]]]:
    """The cubes a tower needs, plus optional distractor cubes in tower colors."""
    pieces = [(1.0, tower_color(level)) for level in range(spec.n_cubes)]
    for _ in range(distractors):
        pieces.append((1.0, tower_color(int(rng.integers(3)))))
    return pieces
