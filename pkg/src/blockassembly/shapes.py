"""Shape categories built from block primitives: arches and color-coded towers.

An arch of height H consists of two pillars of 1x1-footprint pieces at the two
anchor cells, each exactly H-1 tall, with a 3 U beam laid along x across their
tops. A tower is a stack of unit cubes at a single anchor, green at the bottom
then alternating yellow and red. Category instances enumerate every way the
pillars can be composed from {1, 2, 3} U pieces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .world import (
    COLOR_BY_NAME,
    DEFAULT_WORKSPACE,
    EPS,
    TOWER_WORKSPACE,
    Primitive,
    WorldError,
    WorldState,
    Workspace,
    _xy_overlap,
    color_index,
)

ARCH_HEIGHTS = (3, 4, 5)
POSE_TOL = 0.01

_TOWER_COLOR_NAMES = ("green", "yellow", "red")


class UnsupportedHeight(WorldError):
    pass


@dataclass(frozen=True)
class ArchSpec:
    height: int = 3
    workspace: Workspace = DEFAULT_WORKSPACE

    def __post_init__(self) -> None:
        if self.height not in ARCH_HEIGHTS:
            raise UnsupportedHeight(f"arch height must be one of {ARCH_HEIGHTS}, got {self.height}")
        if len(self.workspace.anchors) != 2:
            raise WorldError("arch workspaces need exactly two anchor cells")


@dataclass(frozen=True)
class TowerSpec:
    n_cubes: int = 3
    workspace: Workspace = TOWER_WORKSPACE

    def __post_init__(self) -> None:
        if not 1 <= self.n_cubes <= 8:
            raise WorldError(f"tower size out of range: {self.n_cubes}")


def tower_color(level: int) -> tuple[float, float, float]:
    """Bottom level 0 is green, then yellow and red alternate."""
    if level == 0:
        return COLOR_BY_NAME["green"]
    return COLOR_BY_NAME[_TOWER_COLOR_NAMES[1 + (level - 1) % 2]]


@dataclass(frozen=True)
class TargetPose:
    """One slot of an instance: piece length, pose, and an optional required

    palette color index (None means any color is acceptable there).
    """

    length: float
    orientation: str
    position: tuple[float, float, float]
    color: int | None = None


@dataclass(frozen=True)
class CategoryInstance:
    targets: tuple[TargetPose, ...]
    label: str = ""

    def __len__(self) -> int:
        return len(self.targets)

    def piece_lengths(self) -> tuple[float, ...]:
        return tuple(sorted(t.length for t in self.targets))


@lru_cache(maxsize=None)
def pillar_compositions(height: int) -> tuple[tuple[int, ...], ...]:
    """Ordered compositions of ``height`` into parts 1, 2 and 3 (bottom first)."""
    if height == 0:
        return ((),)
    out = []
    for first in (1, 2, 3):
        if first <= height:
            for rest in pillar_compositions(height - first):
                out.append((first,) + rest)
    return tuple(out)


def _pillar_targets(comp: tuple[int, ...], cx: float, cy: float) -> list[TargetPose]:
    targets = []
    z = 0.0
    for part in comp:
        orientation = "along_x" if part == 1 else "along_z"
        targets.append(TargetPose(float(part), orientation, (cx, cy, z + part / 2)))
        z += part
    return targets


@lru_cache(maxsize=None)
def enumerate_category(spec: ArchSpec | TowerSpec) -> tuple[CategoryInstance, ...]:
    """All instances of the category, in deterministic order.

    Arch counts per height follow c(h) = c(h-1) + c(h-2) + c(h-3) squared:
    4, 16 and 49 instances for heights 3, 4 and 5. Towers have exactly one
    instance. Cached per spec; search code calls this in inner loops.
    """
    if isinstance(spec, TowerSpec):
        (ax, ay) = spec.workspace.anchors[0]
        cx, cy = ax + 0.5, ay + 0.5
        targets = tuple(
            TargetPose(1.0, "along_x", (cx, cy, level + 0.5), color_index(tower_color(level)))
            for level in range(spec.n_cubes)
        )
        return (CategoryInstance(targets, label=f"tower{spec.n_cubes}"),)
    (lx, ly), (rx, ry) = spec.workspace.anchor_centers()
    bridge = spec.workspace.bridge_center()
    assert bridge is not None
    comps = pillar_compositions(spec.height - 1)
    instances = []
    for li, left in enumerate(comps):
        for ri, right in enumerate(comps):
            targets = _pillar_targets(left, lx, ly) + _pillar_targets(right, rx, ry)
            targets.append(
                TargetPose(3.0, "along_x", (bridge[0], bridge[1], spec.height - 1 + 0.5))
            )
            instances.append(
                CategoryInstance(tuple(targets), label=f"arch{spec.height}:{li}-{ri}")
            )
    return tuple(instances)


def _matches(piece: Primitive, target: TargetPose) -> bool:
    if piece.length != target.length or piece.orientation != target.orientation:
        return False
    if target.color is not None and color_index(piece.color) != target.color:
        return False
    return all(abs(a - b) <= POSE_TOL for a, b in zip(piece.position, target.position))


def _column_stack(state: WorldState, cx: float, cy: float) -> list[Primitive]:
    """Pieces whose 1x1 footprint sits exactly on the column at (cx, cy)."""
    stack = []
    for p in state.primitives:
        ex, ey, _ = p.oriented_extents()
        if ex == 1.0 and ey == 1.0 and abs(p.position[0] - cx) <= POSE_TOL and abs(p.position[1] - cy) <= POSE_TOL:
            stack.append(p)
    return sorted(stack, key=lambda p: p.z_bottom)


def _clutter_on_structure(
    state: WorldState, members: set[int]
) -> bool:
    """True if any non-member primitive rests directly on a member."""
    tops = [p for p in state.primitives if p.id in members]
    for p in state.primitives:
        if p.id in members:
            continue
        for q in tops:
            if abs(q.z_top - p.z_bottom) <= POSE_TOL and _xy_overlap(p, q) > 0.0:
                return True
    return False


def classify_arch(state: WorldState, spec: ArchSpec, strict: bool = False) -> bool:
    """True iff the state contains a complete arch of the given height.

    The progress variant (default) ignores clutter elsewhere on the table as
    long as nothing extraneous rests on the arch itself; with ``strict``
    every primitive must be part of the arch.
    """
    h = float(spec.height - 1)
    pillars = []
    for cx, cy in state.workspace.anchor_centers():
        stack = _column_stack(state, cx, cy)
        z = 0.0
        for p in stack:
            if abs(p.z_bottom - z) > POSE_TOL:
                return False
            z = p.z_top
        if abs(z - h) > POSE_TOL:
            return False
        pillars.extend(stack)
    bridge = state.workspace.bridge_center()
    assert bridge is not None
    bar = None
    for p in state.primitives:
        if (
            p.length == 3.0
            and p.orientation == "along_x"
            and abs(p.position[0] - bridge[0]) <= POSE_TOL
            and abs(p.position[1] - bridge[1]) <= POSE_TOL
            and abs(p.z_bottom - h) <= POSE_TOL
        ):
            bar = p
            break
    if bar is None:
        return False
    members = {p.id for p in pillars} | {bar.id}
    if strict:
        return len(members) == len(state.primitives)
    return not _clutter_on_structure(state, members)


def classify_tower(state: WorldState, spec: TowerSpec, strict: bool = False) -> bool:
    """True iff exactly n cubes stand at the anchor in the green/yellow/red

    alternating order. Spares elsewhere are ignored unless ``strict``.
    """
    cx, cy = state.workspace.anchor_centers()[0]
    stack = _column_stack(state, cx, cy)
    if len(stack) != spec.n_cubes:
        return False
    for level, p in enumerate(stack):
        if p.length != 1.0 or abs(p.z_bottom - level) > POSE_TOL:
            return False
        if color_index(p.color) != color_index(tower_color(level)):
            return False
    members = {p.id for p in stack}
    if strict:
        return len(members) == len(state.primitives)
    return not _clutter_on_structure(state, members)


def classify(state: WorldState, spec: ArchSpec | TowerSpec, strict: bool = False) -> bool:
    if isinstance(spec, TowerSpec):
        return classify_tower(state, spec, strict=strict)
    return classify_arch(state, spec, strict=strict)


def identify_instance(
    state: WorldState, spec: ArchSpec | TowerSpec
) -> CategoryInstance | None:
    """The instance fully realized by the state, if any.

    Every target pose must be filled and every unmatched primitive loose,
    mirroring the progress classifier; at most one instance can qualify.
    """
    for instance in enumerate_category(spec):
        matched_ids: set[int] = set()
        ok = True
        for t in instance.targets:
            hit = None
            for p in state.primitives:
                if p.id not in matched_ids and _matches(p, t):
                    hit = p.id
                    break
            if hit is None:
                ok = False
                break
            matched_ids.add(hit)
        if not ok:
            continue
        if all(
            p.id in matched_ids or state.is_loose(p) for p in state.primitives
        ):
            return instance
    return None


def piece_multiset(state: WorldState, with_color: bool) -> tuple:
    if with_color:
        return tuple(sorted((p.length, color_index(p.color)) for p in state.primitives))
    return tuple(sorted(p.length for p in state.primitives))


@lru_cache(maxsize=65536)
def _multiset_feasible(multiset: tuple, instance: CategoryInstance) -> bool:
    have = list(multiset)
    for t in sorted(instance.targets, key=lambda t: (t.color is None, t.length)):
        hit = None
        for i, (length, color) in enumerate(have):
            if length == t.length and (t.color is None or color == t.color):
                hit = i
                break
        if hit is None:
            return False
        have.pop(hit)
    return True


def instance_feasible(instance: CategoryInstance, state: WorldState) -> bool:
    """Whether the state's piece multiset can realize the instance (colors

    constrained only where the instance requires them). The answer is cached
    per multiset: actions move pieces around but never change the multiset,
    so one lookup covers a whole episode.
    """
    return _multiset_feasible(piece_multiset(state, with_color=True), instance)


def completion_score(
    state: WorldState, spec: ArchSpec | TowerSpec, feasible_only: bool = False
) -> float:
    """Fraction of the best-matching instance already in place.

    Per instance: exactly occupied target poses count for it, unmatched
    non-loose primitives count against it (floored at zero). The maximum over
    instances is 1.0 exactly when the progress classifier fires.
    ``feasible_only`` restricts the maximum to instances buildable from the
    state's piece multiset.
    """
    best = 0.0
    for instance in enumerate_category(spec):
        if feasible_only and not instance_feasible(instance, state):
            continue
        matched_ids = set()
        matched = 0
        for t in instance.targets:
            for p in state.primitives:
                if p.id not in matched_ids and _matches(p, t):
                    matched_ids.add(p.id)
                    matched += 1
                    break
        extraneous = sum(
            1 for p in state.primitives if p.id not in matched_ids and not state.is_loose(p)
        )
        best = max(best, max(0, matched - extraneous) / len(instance.targets))
    return best
