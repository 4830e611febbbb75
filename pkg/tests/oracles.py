"""Independent brute-force checkers used to validate the fast implementations.

Everything here is deliberately written from the rule definitions with
rasterization instead of the closed-form interval logic the package uses.
"""

from __future__ import annotations

from blockassembly.world import Primitive, WorldState

TOL = 1e-6
STEP = 0.05


def _footprint_points(piece: Primitive, step: float = STEP) -> list[tuple[float, float]]:
    x0, y0, x1, y1 = piece.footprint()
    nx = max(1, int(round((x1 - x0) / step)))
    ny = max(1, int(round((y1 - y0) / step)))
    return [
        (x0 + (i + 0.5) * (x1 - x0) / nx, y0 + (j + 0.5) * (y1 - y0) / ny)
        for i in range(nx)
        for j in range(ny)
    ]


def _point_in_footprint(piece: Primitive, x: float, y: float) -> bool:
    x0, y0, x1, y1 = piece.footprint()
    return x0 - 1e-9 <= x <= x1 + 1e-9 and y0 - 1e-9 <= y <= y1 + 1e-9


def boxes_overlap_oracle(a: Primitive, b: Primitive) -> bool:
    """Positive-volume intersection, decided axis by axis."""
    for axis in range(3):
        abox, bbox = a.aabb(), b.aabb()
        lo = max(abox[axis], bbox[axis])
        hi = min(abox[axis + 3], bbox[axis + 3])
        if hi - lo <= TOL:
            return False
    return True


def supported_oracle(piece: Primitive, others: list[Primitive]) -> bool:
    """Rasterized support rule: some patch of the footprint rests on tops at

    exactly z_bottom, and the center of mass lies within that patch's bounds.
    """
    if abs(piece.z_bottom) <= TOL:
        return True
    carriers = [q for q in others if abs(q.z_top - piece.z_bottom) <= TOL]
    sup = [
        (x, y)
        for (x, y) in _footprint_points(piece)
        if any(_point_in_footprint(q, x, y) for q in carriers)
    ]
    if not sup:
        return False
    xs = [x for x, _ in sup]
    ys = [y for _, y in sup]
    cx, cy = piece.position[0], piece.position[1]
    return (
        min(xs) - STEP <= cx <= max(xs) + STEP and min(ys) - STEP <= cy <= max(ys) + STEP
    )


def state_valid_oracle(state: WorldState) -> bool:
    prims = state.primitives
    cx, cy = state.workspace.cells
    for p in prims:
        x0, y0, z0, x1, y1, z1 = p.aabb()
        if x0 < -TOL or y0 < -TOL or z0 < -TOL:
            return False
        if x1 > cx + TOL or y1 > cy + TOL or z1 > state.workspace.height + TOL:
            return False
    for i, p in enumerate(prims):
        for q in prims[i + 1 :]:
            if boxes_overlap_oracle(p, q):
                return False
    for p in prims:
        if not supported_oracle(p, [q for q in prims if q.id != p.id]):
            return False
    return True


def blocked_oracle(state: WorldState, pid: int) -> bool:
    """Column sweep: anything whose bottom is at or above the piece's top and

    whose footprint shares a raster point with it blocks the pick.
    """
    p = state.get(pid)
    pts = _footprint_points(p)
    for q in state.primitives:
        if q.id == pid or q.z_bottom < p.z_top - TOL:
            continue
        qx0, qy0, qx1, qy1 = q.footprint()
        for (x, y) in pts:
            if qx0 + 1e-9 < x < qx1 - 1e-9 and qy0 + 1e-9 < y < qy1 - 1e-9:
                return True
    return False


def loose_oracle(state: WorldState, piece: Primitive) -> bool:
    if piece.z_bottom > TOL:
        return False
    for (x, y) in _footprint_points(piece):
        for (i, j) in state.workspace.region_cells():
            if i + 1e-9 < x < i + 1 - 1e-9 and j + 1e-9 < y < j + 1 - 1e-9:
                return False
    return True


def _descriptors(state: WorldState) -> tuple[list, list]:
    structure = []
    loose = []
    for p in state.primitives:
        if loose_oracle(state, p):
            loose.append((p.length, p.color))
        else:
            structure.append(
                (
                    p.length,
                    p.color,
                    p.orientation,
                    tuple(round(v, 2) for v in p.position),
                )
            )
    return sorted(structure), sorted(loose)


def states_equivalent_oracle(a: WorldState, b: WorldState) -> bool:
    """The paper's similarity: equal up to positions of loose table pieces."""
    return a.workspace == b.workspace and _descriptors(a) == _descriptors(b)
