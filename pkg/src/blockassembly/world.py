"""Kinematic block world: primitives, table workspace, states and pick-and-place rules.

Positions are expressed in table units (1 U = 4.5 cm). The table is a 16x16
grid of 1 U cells; a primitive is a unit cube or a 2 U / 3 U beam aligned with
one of the three axes. States are immutable; applying an action returns a new
state and never mutates the old one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

EPS = 1e-6
UNIT_CM = 4.5
UNIT_M = 0.045
GRID_CELLS = 16
WORKSPACE_HEIGHT = 8.0
MAX_PRIMITIVES = 9
QUANTUM = 0.01  # position quantization for canonical keys, in U

ORIENTATIONS = ("along_x", "along_y", "along_z")

# Fixed palette; index 0 is the table surface and never a primitive color.
PALETTE = (
    ("table", (0.4, 0.3, 0.25)),
    ("green", (0.1, 0.6, 0.15)),
    ("yellow", (0.9, 0.8, 0.1)),
    ("red", (0.8, 0.1, 0.1)),
    ("blue", (0.15, 0.3, 0.8)),
    ("grey", (0.6, 0.6, 0.6)),
    ("orange", (0.9, 0.5, 0.1)),
)
COLOR_BY_NAME = {name: rgb for name, rgb in PALETTE}
INDEX_BY_COLOR = {rgb: i for i, (_, rgb) in enumerate(PALETTE)}
PRIMITIVE_COLORS = tuple(rgb for _, rgb in PALETTE[1:])

SCHEMA_VERSION = 1


class WorldError(Exception):
    """Base class for simulator rule violations."""


class UnknownPrimitive(WorldError):
    pass


class PickBlocked(WorldError):
    pass


class PlacementCollision(WorldError):
    pass


class PlacementUnsupported(WorldError):
    pass


class OutOfWorkspace(WorldError):
    pass


class TooManyPrimitives(WorldError):
    pass


class HeldNotInState(WorldError):
    pass


@dataclass(frozen=True)
class Workspace:
    """Table geometry plus the designated structure anchor cells.

    ``anchors`` holds one cell for tower tasks or two cells (2 U apart along x,
    same y) for arch tasks. The region covered by the anchors and the cells
    between them is reserved for the structure; loose primitives are never
    scattered there.
    """

    cells: tuple[int, int] = (GRID_CELLS, GRID_CELLS)
    unit_cm: float = UNIT_CM
    height: float = WORKSPACE_HEIGHT
    anchors: tuple[tuple[int, int], ...] = ((6, 8), (8, 8))

    def anchor_centers(self) -> tuple[tuple[float, float], ...]:
        return tuple((i + 0.5, j + 0.5) for i, j in self.anchors)

    def region_cells(self) -> frozenset[tuple[int, int]]:
        cells = set(self.anchors)
        if len(self.anchors) == 2:
            (ax, ay), (bx, by) = self.anchors
            lo, hi = sorted((ax, bx))
            for x in range(lo, hi + 1):
                cells.add((x, ay))
        return frozenset(cells)

    def bridge_center(self) -> tuple[float, float] | None:
        if len(self.anchors) != 2:
            return None
        (ax, ay), (bx, _) = self.anchors
        return ((ax + bx) / 2 + 0.5, ay + 0.5)


DEFAULT_WORKSPACE = Workspace()
TOWER_WORKSPACE = Workspace(anchors=((7, 8),))


def orientation_index(orientation: str) -> int:
    return ORIENTATIONS.index(orientation)


def color_index(color: tuple[float, float, float]) -> int:
    try:
        return INDEX_BY_COLOR[color]
    except KeyError:
        raise WorldError(f"color {color!r} is not in the palette") from None


@dataclass(frozen=True)
class Primitive:
    """One building block. ``extents`` is the canonical (length, 1, 1) triple;

    the axis the length runs along is given by ``orientation``. ``position``
    is the box center in U. Cubes always carry the canonical along_x
    orientation.
    """

    id: int
    extents: tuple[float, float, float]
    color: tuple[float, float, float]
    position: tuple[float, float, float]
    orientation: str = "along_x"

    def __post_init__(self) -> None:
        length = self.extents[0]
        if self.extents[1] != 1.0 or self.extents[2] != 1.0 or length not in (1.0, 2.0, 3.0):
            raise WorldError(f"unsupported extents {self.extents!r}")
        if self.orientation not in ORIENTATIONS:
            raise WorldError(f"unknown orientation {self.orientation!r}")
        if length == 1.0 and self.orientation != "along_x":
            raise WorldError("cubes are canonically along_x")
        color_index(self.color)

    @property
    def length(self) -> float:
        return self.extents[0]

    # Geometry accessors are cached: a primitive is immutable and collision
    # and support checks hit these millions of times during search.

    @cached_property
    def _oriented(self) -> tuple[float, float, float]:
        length = self.extents[0]
        if self.orientation == "along_x":
            return (length, 1.0, 1.0)
        if self.orientation == "along_y":
            return (1.0, length, 1.0)
        return (1.0, 1.0, length)

    def oriented_extents(self) -> tuple[float, float, float]:
        return self._oriented

    @cached_property
    def _aabb(self) -> tuple[float, float, float, float, float, float]:
        ex, ey, ez = self._oriented
        x, y, z = self.position
        return (x - ex / 2, y - ey / 2, z - ez / 2, x + ex / 2, y + ey / 2, z + ez / 2)

    def aabb(self) -> tuple[float, float, float, float, float, float]:
        return self._aabb

    @property
    def z_bottom(self) -> float:
        return self._aabb[2]

    @property
    def z_top(self) -> float:
        return self._aabb[5]

    def footprint(self) -> tuple[float, float, float, float]:
        x0, y0, _, x1, y1, _ = self._aabb
        return (x0, y0, x1, y1)


@dataclass(frozen=True)
class AssemblyAction:
    """Pick a primitive and place it at a target pose (box center)."""

    pick_id: int
    place_position: tuple[float, float, float]
    orientation: str

    def signature(self) -> tuple:
        x, y, z = self.place_position
        return (self.pick_id, round(x, 3), round(y, 3), round(z, 3), self.orientation)


@dataclass(frozen=True)
class CanonicalKey:
    """State identity up to positions of loose table-surface primitives.

    ``structure`` lists quantized (extents, color index, orientation, position)
    tuples for primitives that are off the table or inside the anchor-region
    columns; ``loose`` is the multiset of (extents, color index) for the rest.
    Built purely from values, so it is stable across processes.
    """

    structure: tuple
    loose: tuple

    @property
    def text(self) -> str:
        s = ";".join(
            f"{int(l)}c{c}o{o}p{x:.2f},{y:.2f},{z:.2f}" for (l, c, o, (x, y, z)) in self.structure
        )
        t = ";".join(f"{int(l)}c{c}" for (l, c) in self.loose)
        return f"S[{s}]L[{t}]"


def _xy_overlap(a: Primitive, b: Primitive) -> float:
    ax0, ay0, ax1, ay1 = a.footprint()
    bx0, by0, bx1, by1 = b.footprint()
    w = min(ax1, bx1) - max(ax0, bx0)
    d = min(ay1, by1) - max(ay0, by0)
    if w <= EPS or d <= EPS:
        return 0.0
    return w * d


def _boxes_collide(a: Primitive, b: Primitive) -> bool:
    ax0, ay0, az0, ax1, ay1, az1 = a.aabb()
    bx0, by0, bz0, bx1, by1, bz1 = b.aabb()
    return (
        min(ax1, bx1) - max(ax0, bx0) > EPS
        and min(ay1, by1) - max(ay0, by0) > EPS
        and min(az1, bz1) - max(az0, bz0) > EPS
    )


def _check_supported(piece: Primitive, others: tuple[Primitive, ...]) -> None:
    """Raise PlacementUnsupported unless the piece rests on the table or on

    primitives whose top faces sit exactly at its bottom and whose supported
    footprint patch contains the piece's center.
    """
    if abs(piece.z_bottom) <= EPS:
        return
    px0, py0, px1, py1 = piece.footprint()
    hx0 = hy0 = float("inf")
    hx1 = hy1 = float("-inf")
    found = False
    for q in others:
        if abs(q.z_top - piece.z_bottom) > EPS:
            continue
        qx0, qy0, qx1, qy1 = q.footprint()
        ox0, oy0 = max(px0, qx0), max(py0, qy0)
        ox1, oy1 = min(px1, qx1), min(py1, qy1)
        if ox1 - ox0 <= EPS or oy1 - oy0 <= EPS:
            continue
        found = True
        hx0, hy0 = min(hx0, ox0), min(hy0, oy0)
        hx1, hy1 = max(hx1, ox1), max(hy1, oy1)
    if not found:
        raise PlacementUnsupported(
            f"primitive {piece.id} floats at z_bottom={piece.z_bottom:.3f}"
        )
    cx, cy = piece.position[0], piece.position[1]
    if not (hx0 - EPS <= cx <= hx1 + EPS and hy0 - EPS <= cy <= hy1 + EPS):
        raise PlacementUnsupported(
            f"primitive {piece.id} center ({cx:.2f},{cy:.2f}) outside its support patch"
        )


def _check_bounds(piece: Primitive, workspace: Workspace) -> None:
    x0, y0, z0, x1, y1, z1 = piece.aabb()
    cx, cy = workspace.cells
    if x0 < -EPS or y0 < -EPS or z0 < -EPS or x1 > cx + EPS or y1 > cy + EPS or z1 > workspace.height + EPS:
        raise OutOfWorkspace(f"primitive {piece.id} leaves the workspace: {piece.aabb()}")


class WorldState:
    """Immutable collection of primitives on one workspace.

    Invariants (checked at construction): at most MAX_PRIMITIVES pieces, ids
    unique, boxes inside the workspace, pairwise interior-disjoint, and every
    piece on the table or supported. Derived data (support edges, blocked set)
    is computed once.
    """

    __slots__ = (
        "primitives",
        "workspace",
        "_by_id",
        "blocked",
        "support_edges",
        "_aabb_arr",
        "_above_pairs",
    )

    def __init__(
        self,
        primitives: tuple[Primitive, ...] = (),
        workspace: Workspace = DEFAULT_WORKSPACE,
        validate: bool = True,
    ) -> None:
        prims = tuple(sorted(primitives, key=lambda p: p.id))
        object.__setattr__(self, "primitives", prims)
        object.__setattr__(self, "workspace", workspace)
        object.__setattr__(self, "_by_id", {p.id: p for p in prims})
        if len(self._by_id) != len(prims):
            raise WorldError("duplicate primitive ids")
        if len(prims) > MAX_PRIMITIVES:
            raise TooManyPrimitives(f"{len(prims)} primitives exceed the cap of {MAX_PRIMITIVES}")
        if validate:
            for i, p in enumerate(prims):
                _check_bounds(p, workspace)
                for q in prims[i + 1 :]:
                    if _boxes_collide(p, q):
                        raise PlacementCollision(f"primitives {p.id} and {q.id} overlap")
                _check_supported(p, tuple(q for q in prims if q.id != p.id))
        n = len(prims)
        aabb = np.empty((n, 6), dtype=np.float64)
        for i, p in enumerate(prims):
            aabb[i] = p.aabb()
        object.__setattr__(self, "_aabb_arr", aabb)
        if n:
            x0, y0, z0, x1, y1, z1 = aabb.T
            w = np.minimum.outer(x1, x1) - np.maximum.outer(x0, x0)
            d = np.minimum.outer(y1, y1) - np.maximum.outer(y0, y0)
            overlap = (w > EPS) & (d > EPS) & (w * d > EPS)
            above = overlap & (z0[None, :] >= z1[:, None] - EPS)
            np.fill_diagonal(above, False)
            touch = above & (np.abs(z0[None, :] - z1[:, None]) <= EPS)
            blocked = frozenset(prims[i].id for i in np.nonzero(above.any(axis=1))[0])
            edges = tuple(
                sorted((prims[i].id, prims[j].id) for i, j in zip(*np.nonzero(touch)))
            )
        else:
            above = np.zeros((0, 0), dtype=bool)
            blocked = frozenset()
            edges = ()
        object.__setattr__(self, "_above_pairs", above)
        object.__setattr__(self, "blocked", blocked)
        object.__setattr__(self, "support_edges", edges)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("WorldState is immutable")

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, WorldState)
            and self.primitives == other.primitives
            and self.workspace == other.workspace
        )

    def __len__(self) -> int:
        return len(self.primitives)

    def get(self, pid: int) -> Primitive:
        try:
            return self._by_id[pid]
        except KeyError:
            raise UnknownPrimitive(f"no primitive with id {pid}") from None

    def has(self, pid: int) -> bool:
        return pid in self._by_id

    def is_loose(self, piece: Primitive) -> bool:
        """On the table surface and clear of the anchor-region columns."""
        if piece.z_bottom > EPS:
            return False
        px0, py0, px1, py1 = piece.footprint()
        for i, j in self.workspace.region_cells():
            w = min(px1, i + 1.0) - max(px0, float(i))
            d = min(py1, j + 1.0) - max(py0, float(j))
            if w > EPS and d > EPS:
                return False
        return True

    def structure_ids(self) -> tuple[int, ...]:
        return tuple(p.id for p in self.primitives if not self.is_loose(p))

    def loose_ids(self) -> tuple[int, ...]:
        return tuple(p.id for p in self.primitives if self.is_loose(p))

    def column_top(self, cell: tuple[int, int]) -> float:
        """Highest top face over a cell center, 0.0 for an empty column."""
        cx, cy = cell[0] + 0.5, cell[1] + 0.5
        top = 0.0
        for p in self.primitives:
            x0, y0, x1, y1 = p.footprint()
            if x0 - EPS <= cx <= x1 + EPS and y0 - EPS <= cy <= y1 + EPS:
                top = max(top, p.z_top)
        return top


def non_blocked(state: WorldState) -> tuple[int, ...]:
    """Ids that can be picked: nothing rests on or above their column."""
    return tuple(p.id for p in state.primitives if p.id not in state.blocked)


def canonical_key(state: WorldState) -> CanonicalKey:
    structure = []
    loose = []
    for p in state.primitives:
        if state.is_loose(p):
            loose.append((p.length, color_index(p.color)))
        else:
            x, y, z = p.position
            structure.append(
                (
                    p.length,
                    color_index(p.color),
                    orientation_index(p.orientation),
                    (round(x, 2) + 0.0, round(y, 2) + 0.0, round(z, 2) + 0.0),
                )
            )
    return CanonicalKey(tuple(sorted(structure)), tuple(sorted(loose)))


def apply_action(state: WorldState, action: AssemblyAction) -> WorldState:
    """Transition function. Raises a specific WorldError when a precondition

    fails: UnknownPrimitive, PickBlocked, PlacementCollision,
    PlacementUnsupported or OutOfWorkspace.
    """
    piece = state.get(action.pick_id)
    if action.pick_id in state.blocked:
        raise PickBlocked(f"primitive {action.pick_id} has something above it")
    orientation = action.orientation
    if piece.length == 1.0:
        orientation = "along_x"
    elif orientation not in ORIENTATIONS:
        raise WorldError(f"unknown orientation {orientation!r}")
    moved = replace(piece, position=action.place_position, orientation=orientation)
    rest = tuple(q for q in state.primitives if q.id != piece.id)
    _check_bounds(moved, state.workspace)
    for q in rest:
        if _boxes_collide(moved, q):
            raise PlacementCollision(f"primitive {moved.id} would overlap {q.id}")
    _check_supported(moved, rest)
    return WorldState(rest + (moved,), state.workspace, validate=False)


def invert_action(state: WorldState, action: AssemblyAction) -> AssemblyAction:
    """Assembly action that returns the picked piece to its pose in ``state``.

    Applying ``action`` to ``state`` and then the inverse restores every pose
    exactly.
    """
    piece = state.get(action.pick_id)
    return AssemblyAction(piece.id, piece.position, piece.orientation)


def lying_pose(cell: tuple[int, int], length: float) -> tuple[float, float, float]:
    """Center of a piece laid flat along x with its leftmost cell at ``cell``."""
    i, j = cell
    return (i + length / 2, j + 0.5, 0.5)


def free_loose_cells(state: WorldState, length: float) -> list[tuple[int, int]]:
    """Anchor cells where a piece of ``length`` can lie flat along x: inside the

    grid, clear of the structure region and of every existing primitive.
    """
    cx, cy = state.workspace.cells
    region = state.workspace.region_cells()
    boxes = [p.footprint() for p in state.primitives]
    span = int(length)
    out = []
    for j in range(cy):
        for i in range(cx - span + 1):
            covered = [(i + k, j) for k in range(span)]
            if any(c in region for c in covered):
                continue
            x0, y0, x1, y1 = float(i), float(j), float(i + span), float(j + 1)
            if any(
                min(x1, bx1) - max(x0, bx0) > EPS and min(y1, by1) - max(y0, by0) > EPS
                for bx0, by0, bx1, by1 in boxes
            ):
                continue
            out.append((i, j))
    return out


def _placement_points(state: WorldState, exclude_id: int) -> list[tuple[float, float, float]]:
    """Candidate (x, y, z_bottom) placement targets with ``exclude_id`` removed:

    the top of every stack, each free anchor cell at ground level, and the
    bridge slot when both anchor columns carry equally tall stacks.
    """
    ws = state.workspace
    prims = state.primitives
    idx = [i for i, p in enumerate(prims) if p.id != exclude_id]
    points: dict[tuple[float, float, float], None] = {}
    if idx:
        sub = state._aabb_arr[idx]
        x0, y0, _, x1, y1, z1 = sub.T
        covered = state._above_pairs[np.ix_(idx, idx)].any(axis=1)
        for k, i in enumerate(idx):
            if not covered[k]:
                x, y, _ = prims[i].position
                points[(round(x, 3), round(y, 3), round(float(z1[k]), 3))] = None
    anchor_tops = []
    for (cx, cy) in ws.anchor_centers():
        top = 0.0
        if idx:
            hit = (x0 - EPS <= cx) & (cx <= x1 + EPS) & (y0 - EPS <= cy) & (cy <= y1 + EPS)
            if hit.any():
                top = max(top, float(z1[hit].max()))
        anchor_tops.append(top)
        if top == 0.0:
            points[(round(cx, 3), round(cy, 3), 0.0)] = None
    bridge = ws.bridge_center()
    if bridge is not None and len(anchor_tops) == 2:
        t = anchor_tops[0]
        if t >= 1.0 - EPS and abs(anchor_tops[0] - anchor_tops[1]) <= EPS:
            points[(round(bridge[0], 3), round(bridge[1], 3), round(t, 3))] = None
    return sorted(points)


def _valid_placements(
    state: WorldState, piece: Primitive, points: list[tuple[float, float, float]]
) -> dict[str, np.ndarray]:
    """Per-orientation validity of placing ``piece`` at each candidate point.

    Must mirror apply_action's checks exactly (bounds, collision against the
    other pieces, support, and the no-op exclusion) so an action reported
    valid here never fails on apply. The whole candidate batch is tested with
    array arithmetic identical to the scalar predicates.
    """
    orientations = ("along_x",) if piece.length == 1.0 else ORIENTATIONS
    rest_idx = [i for i, p in enumerate(state.primitives) if p.id != piece.id]
    rest = state._aabb_arr[rest_idx]
    rx0, ry0, rz0, rx1, ry1, rz1 = rest.T
    wx, wy = state.workspace.cells
    wz = state.workspace.height
    pts = np.asarray(points, dtype=np.float64).reshape(len(points), 3)
    px, py, pz = piece.position
    out: dict[str, np.ndarray] = {}
    for orientation in orientations:
        if orientation == "along_x":
            ex, ey, ez = piece.length, 1.0, 1.0
        elif orientation == "along_y":
            ex, ey, ez = 1.0, piece.length, 1.0
        else:
            ex, ey, ez = 1.0, 1.0, piece.length
        cx, cy = pts[:, 0], pts[:, 1]
        cz = pts[:, 2] + ez / 2
        x0, x1 = cx - ex / 2, cx + ex / 2
        y0, y1 = cy - ey / 2, cy + ey / 2
        z0, z1 = cz - ez / 2, cz + ez / 2
        ok = (
            (x0 >= -EPS) & (y0 >= -EPS) & (z0 >= -EPS)
            & (x1 <= wx + EPS) & (y1 <= wy + EPS) & (z1 <= wz + EPS)
        )
        if orientation == piece.orientation:
            noop = (np.abs(cx - px) <= EPS) & (np.abs(cy - py) <= EPS) & (np.abs(cz - pz) <= EPS)
            ok &= ~noop
        if rest_idx:
            ow = np.minimum(x1[:, None], rx1) - np.maximum(x0[:, None], rx0)
            od = np.minimum(y1[:, None], ry1) - np.maximum(y0[:, None], ry0)
            oh = np.minimum(z1[:, None], rz1) - np.maximum(z0[:, None], rz0)
            ok &= ~((ow > EPS) & (od > EPS) & (oh > EPS)).any(axis=1)
            touch = (np.abs(rz1 - z0[:, None]) <= EPS) & (ow > EPS) & (od > EPS)
            found = touch.any(axis=1)
            hx0 = np.where(touch, np.maximum(x0[:, None], rx0), np.inf).min(axis=1)
            hy0 = np.where(touch, np.maximum(y0[:, None], ry0), np.inf).min(axis=1)
            hx1 = np.where(touch, np.minimum(x1[:, None], rx1), -np.inf).max(axis=1)
            hy1 = np.where(touch, np.minimum(y1[:, None], ry1), -np.inf).max(axis=1)
            centered = (
                (hx0 - EPS <= cx) & (cx <= hx1 + EPS)
                & (hy0 - EPS <= cy) & (cy <= hy1 + EPS)
            )
            ok &= (np.abs(z0) <= EPS) | (found & centered)
        else:
            ok &= np.abs(z0) <= EPS
        out[orientation] = ok
    return out


def _placement_action(
    piece: Primitive, point: tuple[float, float, float], orientation: str
) -> AssemblyAction:
    ez = piece.length if orientation == "along_z" else 1.0
    x, y, zb = point
    return AssemblyAction(piece.id, (x, y, zb + ez / 2), orientation)


def enumerate_actions(state: WorldState) -> list[AssemblyAction]:
    """Every valid assembly action, in deterministic order (pick id, then

    placement point, then orientation). Placements cover stack tops, free
    anchor cells and the bridge slot; table scatter moves are not part of the
    action space.
    """
    actions = []
    seen = set()
    for pid in non_blocked(state):
        piece = state.get(pid)
        orientations = ("along_x",) if piece.length == 1.0 else ORIENTATIONS
        points = _placement_points(state, pid)
        if not points:
            continue
        valid = _valid_placements(state, piece, points)
        for row, point in enumerate(points):
            for orientation in orientations:
                if not valid[orientation][row]:
                    continue
                action = _placement_action(piece, point, orientation)
                sig = action.signature()
                if sig not in seen:
                    seen.add(sig)
                    actions.append(action)
    return actions


def sample_action(state: WorldState, rng) -> AssemblyAction | None:
    """One action drawn uniformly from enumerate_actions(state): the whole

    candidate grid is validity-checked in one batch, then a random
    permutation takes the first valid candidate (identical distribution to
    enumerating and indexing uniformly).
    """
    picks = non_blocked(state)
    if not picks:
        return None
    candidates: list[tuple[Primitive, tuple[float, float, float], str]] = []
    flags: list[bool] = []
    for pid in picks:
        piece = state.get(pid)
        orientations = ("along_x",) if piece.length == 1.0 else ORIENTATIONS
        points = _placement_points(state, pid)
        if not points:
            continue
        valid = _valid_placements(state, piece, points)
        for row, point in enumerate(points):
            for orientation in orientations:
                candidates.append((piece, point, orientation))
                flags.append(bool(valid[orientation][row]))
    order = rng.permutation(len(candidates))
    for idx in order:
        if flags[idx]:
            piece, point, orientation = candidates[idx]
            return _placement_action(piece, point, orientation)
    return None


def _round6(x: float) -> float:
    return round(x, 6) + 0.0


def state_to_dict(state: WorldState) -> dict:
    return {
        "primitives": [
            {
                "id": p.id,
                "extents": [_round6(v) for v in p.extents],
                "color": [_round6(v) for v in p.color],
                "position": [_round6(v) for v in p.position],
                "orientation": p.orientation,
            }
            for p in state.primitives
        ],
        "workspace": {
            "cells": list(state.workspace.cells),
            "unit_cm": _round6(state.workspace.unit_cm),
            "height": _round6(state.workspace.height),
            "anchors": [list(a) for a in state.workspace.anchors],
        },
    }


def state_from_dict(data: dict) -> WorldState:
    ws_data = data["workspace"]
    workspace = Workspace(
        cells=tuple(ws_data["cells"]),
        unit_cm=ws_data.get("unit_cm", UNIT_CM),
        height=ws_data.get("height", WORKSPACE_HEIGHT),
        anchors=tuple(tuple(a) for a in ws_data["anchors"]),
    )
    prims = tuple(
        Primitive(
            id=p["id"],
            extents=tuple(p["extents"]),
            color=tuple(p["color"]),
            position=tuple(p["position"]),
            orientation=p["orientation"],
        )
        for p in data["primitives"]
    )
    return WorldState(prims, workspace)


def state_to_json(state: WorldState) -> str:
    return json.dumps(state_to_dict(state), separators=(",", ":"))


def state_from_json(text: str) -> WorldState:
    return state_from_dict(json.loads(text))


def action_to_dict(action: AssemblyAction) -> dict:
    return {
        "pick_id": action.pick_id,
        "place_position": [_round6(v) for v in action.place_position],
        "orientation": action.orientation,
    }


def action_from_dict(data: dict) -> AssemblyAction:
    return AssemblyAction(
        pick_id=data["pick_id"],
        place_position=tuple(data["place_position"]),
        orientation=data["orientation"],
    )
