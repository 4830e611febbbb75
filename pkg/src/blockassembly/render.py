"""Synthetic camera: depth and palette-index segmentation of a state.

A fixed pinhole camera looks at the table front-on from above horizontal.
Depth is the Euclidean ray distance in meters (float32); segmentation holds
palette indices (uint8, 0 for the table). During the place phase the held
primitive is lifted out of the scene and hovers at a fixed pose above the
table center.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace as dc_replace
from functools import lru_cache

import numpy as np

from .world import UNIT_M, HeldNotInState, Primitive, WorldState, color_index

IMAGE_SIZE = 256
HOVER_XY = (8.0, 8.0)
HOVER_CLEARANCE = 6.0

from . import _raycast_np

try:
    from . import _raycast as _raycast_c

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - build-dependent
    _raycast_c = None
    HAVE_COMPILED = False


def _default_backend() -> str:
    forced = os.environ.get("BLOCKASSEMBLY_BACKEND", "")
    if forced in ("python", "numpy"):
        return "python"
    if forced == "cython" and not HAVE_COMPILED:
        raise RuntimeError("compiled raycast backend requested but not built")
    return "cython" if HAVE_COMPILED else "python"


def kernel_for(backend: str | None):
    name = backend or _default_backend()
    if name in ("python", "numpy"):
        return _raycast_np
    if name == "cython":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled raycast backend is not available")
        return _raycast_c
    raise ValueError(f"unknown backend {name!r}")


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera with fixed look-at extrinsics, x right / y down / z forward."""

    eye: tuple[float, float, float] = (0.36, -0.85, 0.62)
    target: tuple[float, float, float] = (0.36, 0.36, 0.0)
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)
    fx: float = 290.0
    fy: float = 290.0
    cx: float = 127.5
    cy: float = 127.5
    width: int = IMAGE_SIZE
    height: int = IMAGE_SIZE

    def rotation(self) -> np.ndarray:
        forward = np.asarray(self.target, dtype=np.float64) - np.asarray(self.eye, dtype=np.float64)
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(self.up, dtype=np.float64))
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        return np.stack([right, down, forward])

    def ray_dirs(self) -> np.ndarray:
        return _ray_dirs_cached(self)

    def project(self, points: np.ndarray) -> np.ndarray:
        """World points (N, 3) to continuous pixel coordinates (N, 2) as (u, v)."""
        rel = np.atleast_2d(points) - np.asarray(self.eye, dtype=np.float64)
        cam = rel @ self.rotation().T
        u = self.cx + self.fx * cam[:, 0] / cam[:, 2]
        v = self.cy + self.fy * cam[:, 1] / cam[:, 2]
        return np.stack([u, v], axis=1)

    def to_dict(self) -> dict:
        return {
            "eye": list(self.eye),
            "target": list(self.target),
            "up": list(self.up),
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }


@lru_cache(maxsize=4)
def _ray_dirs_cached(camera: CameraModel) -> np.ndarray:
    rot = camera.rotation()
    u = (np.arange(camera.width, dtype=np.float64) - camera.cx) / camera.fx
    v = (np.arange(camera.height, dtype=np.float64) - camera.cy) / camera.fy
    uu, vv = np.meshgrid(u, v)
    cam = np.stack([uu, vv, np.ones_like(uu)], axis=-1)
    world = cam @ rot
    world /= np.linalg.norm(world, axis=-1, keepdims=True)
    world.setflags(write=False)
    return world


DEFAULT_CAMERA = CameraModel()


@dataclass(frozen=True)
class Observation:
    """Rendered depth + segmentation, with the inputs kept for re-rendering."""

    depth: np.ndarray
    seg: np.ndarray
    phase: str
    held_id: int | None
    state: WorldState
    camera: CameraModel


def hover_primitive(piece: Primitive) -> Primitive:
    ez = piece.oriented_extents()[2]
    return dc_replace(piece, position=(HOVER_XY[0], HOVER_XY[1], HOVER_CLEARANCE + ez / 2))


def _scene_boxes(
    state: WorldState, phase: str, held_id: int | None, extent_noise: float, rng
) -> tuple[np.ndarray, np.ndarray]:
    pieces = []
    for p in state.primitives:
        if held_id is not None and p.id == held_id:
            continue
        pieces.append(p)
    if phase == "place":
        pieces.append(hover_primitive(state.get(held_id)))
    boxes = np.empty((len(pieces), 6), dtype=np.float64)
    colors = np.empty(len(pieces), dtype=np.uint8)
    for i, p in enumerate(pieces):
        x0, y0, z0, x1, y1, z1 = p.aabb()
        if extent_noise > 0.0:
            ex, ey, ez = p.oriented_extents()
            jit = rng.uniform(-extent_noise, extent_noise, size=3)
            hx, hy, hz = ex * (1 + jit[0]) / 2, ey * (1 + jit[1]) / 2, ez * (1 + jit[2]) / 2
            cx, cy, cz = p.position
            x0, y0, z0, x1, y1, z1 = cx - hx, cy - hy, cz - hz, cx + hx, cy + hy, cz + hz
        boxes[i] = (x0 * UNIT_M, y0 * UNIT_M, z0 * UNIT_M, x1 * UNIT_M, y1 * UNIT_M, z1 * UNIT_M)
        colors[i] = color_index(p.color)
    return boxes, colors


def render(
    state: WorldState,
    phase: str = "pick",
    held_id: int | None = None,
    camera: CameraModel = DEFAULT_CAMERA,
    backend: str | None = None,
) -> Observation:
    if phase not in ("pick", "place"):
        raise ValueError(f"unknown phase {phase!r}")
    if (held_id is not None) != (phase == "place"):
        raise ValueError("held_id must be given exactly when phase='place'")
    if held_id is not None and not state.has(held_id):
        raise HeldNotInState(f"held primitive {held_id} is not part of the state")
    boxes, colors = _scene_boxes(state, phase, held_id, 0.0, None)
    kernel = kernel_for(backend)
    origin = np.asarray(camera.eye, dtype=np.float64)
    depth, seg = kernel.render_scene(origin, camera.ray_dirs(), boxes, colors)
    return Observation(depth, seg, phase, held_id, state, camera)


def augment(
    obs: Observation,
    bernoulli_p: float = 0.0,
    extent_noise: float = 0.0,
    seed: int = 0,
    backend: str | None = None,
) -> Observation:
    """Noise models: re-render with jittered box extents, then flip random

    segmentation pixels to the table index. Deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    depth, seg = obs.depth, obs.seg
    if extent_noise > 0.0:
        boxes, colors = _scene_boxes(obs.state, obs.phase, obs.held_id, extent_noise, rng)
        kernel = kernel_for(backend)
        origin = np.asarray(obs.camera.eye, dtype=np.float64)
        depth, seg = kernel.render_scene(origin, obs.camera.ray_dirs(), boxes, colors)
    if bernoulli_p > 0.0:
        flip = rng.random(seg.shape) < bernoulli_p
        seg = np.where(flip, np.uint8(0), seg)
    return Observation(depth, seg, obs.phase, obs.held_id, obs.state, obs.camera)
