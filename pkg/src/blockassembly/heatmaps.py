"""Pick and place action sets as 4-channel heatmaps over a 64x64 grid.

Channel 0 carries the position distribution: an amplitude-1 Gaussian blob at
every action location, overlapping blobs combined per pixel by max so each
mode keeps its peak. Channels 1 to 3 repeat the blob on the channel of the
action's orientation class. Decoding finds local maxima of channel 0, then
reads the orientation as the channel argmax at that cell.

The grid is aligned with the table: workspace coordinates map via u = 4 x,
so the workspace center (8, 8) lands on pixel (32, 32) and every legal piece
center (a multiple of half a unit) lands on an exact pixel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .render import DEFAULT_CAMERA, CameraModel, Observation, augment, render
from .tensorio import SCHEMA_VERSION, load_array, save_array
from .world import (
    GRID_CELLS,
    AssemblyAction,
    WorldError,
    WorldState,
    apply_action,
    canonical_key,
    enumerate_actions,
    invert_action,
    non_blocked,
    orientation_index,
    sample_action,
    state_from_dict,
)

HEATMAP_SIZE = 64
PIXELS_PER_UNIT = HEATMAP_SIZE / GRID_CELLS
BLOB_SIGMA = 1.5
MIN_PEAK_SCORE = 0.05
NMS_RADIUS = 2.0
SNAP_RADIUS = 1.5


class PositionOutsideGrid(WorldError):
    pass


class NoNearbyPrimitive(WorldError):
    pass


class NoNearbyPlacement(WorldError):
    pass


class DecodedPeak(NamedTuple):
    u: int
    v: int
    orientation: int
    score: float


@dataclass(frozen=True)
class Heatmap:
    """4 x 64 x 64 action distribution, values in [0, 1]."""

    grid: np.ndarray
    kind: str

    def __post_init__(self):
        if self.grid.shape != (4, HEATMAP_SIZE, HEATMAP_SIZE):
            raise ValueError(f"bad heatmap shape {self.grid.shape}")
        if self.kind not in ("pick", "place"):
            raise ValueError(f"unknown heatmap kind {self.kind!r}")


@dataclass(frozen=True)
class PolicySample:
    """One observation-heatmap pair of the policy dataset."""

    observation: Observation
    heatmap: Heatmap
    meta: dict


def grid_from_xy(x: float, y: float) -> tuple[float, float]:
    return x * PIXELS_PER_UNIT, y * PIXELS_PER_UNIT


def xy_from_grid(u: float, v: float) -> tuple[float, float]:
    return u / PIXELS_PER_UNIT, v / PIXELS_PER_UNIT


def _blob_centers(
    actions: Iterable[AssemblyAction], kind: str, state: WorldState | None
) -> list[tuple[float, float, int]]:
    centers = []
    for action in actions:
        if kind == "pick":
            if state is None:
                raise ValueError("pick heatmaps need the state for piece positions")
            piece = state.get(action.pick_id)
            x, y, _ = piece.position
            orient = orientation_index(piece.orientation)
        else:
            x, y, _ = action.place_position
            orient = orientation_index(action.orientation)
        u, v = grid_from_xy(x, y)
        if not (0.0 <= u <= HEATMAP_SIZE - 1 and 0.0 <= v <= HEATMAP_SIZE - 1):
            raise PositionOutsideGrid(f"action at ({x}, {y}) maps off the heatmap")
        centers.append((u, v, orient))
    return centers


def encode_heatmap(
    actions: Iterable[AssemblyAction], kind: str, state: WorldState | None = None
) -> Heatmap:
    """Gaussian blob per action, max-combined; orientation channels mirror it.

    ``kind`` selects which end of the action is encoded: the picked piece's
    current position (``state`` required to look it up) or the placement
    target.
    """
    if kind not in ("pick", "place"):
        raise ValueError(f"unknown heatmap kind {kind!r}")
    centers = _blob_centers(actions, kind, state)
    if not centers:
        raise ValueError("cannot encode an empty action set")
    grid = np.zeros((4, HEATMAP_SIZE, HEATMAP_SIZE), dtype=np.float32)
    uu, vv = np.meshgrid(
        np.arange(HEATMAP_SIZE, dtype=np.float64),
        np.arange(HEATMAP_SIZE, dtype=np.float64),
    )
    for u, v, orient in centers:
        blob = np.exp(
            -((uu - u) ** 2 + (vv - v) ** 2) / (2.0 * BLOB_SIGMA**2)
        ).astype(np.float32)
        np.maximum(grid[0], blob, out=grid[0])
        np.maximum(grid[1 + orient], blob, out=grid[1 + orient])
    return Heatmap(grid, kind)


def decode_heatmap(hm: Heatmap, top_k: int) -> list[DecodedPeak]:
    """Strongest local maxima of the position channel, orientation by argmax.

    A cell is a candidate when it is maximal over its 3x3 neighborhood and
    scores at least MIN_PEAK_SCORE; candidates are taken score-descending
    (ties row-major) with non-max suppression of radius NMS_RADIUS cells.
    """
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    pos = np.asarray(hm.grid[0], dtype=np.float64)
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
    peaks: list[DecodedPeak] = []
    for i in order:
        if len(peaks) == top_k:
            break
        u, v = int(us[i]), int(vs[i])
        if any((u - p.u) ** 2 + (v - p.v) ** 2 <= NMS_RADIUS**2 for p in peaks):
            continue
        orient = int(np.argmax(hm.grid[1:4, v, u]))
        peaks.append(DecodedPeak(u, v, orient, float(pos[v, u])))
    return peaks


def snap_decoded_action(
    state: WorldState,
    decoded: DecodedPeak,
    phase: str,
    held_id: int | None = None,
):
    """Grid cell back to a concrete pick target or placement.

    For the pick phase, returns the id of the nearest pickable primitive
    within SNAP_RADIUS units of the decoded cell. For the place phase,
    returns the nearest valid action from enumerate_actions (restricted to
    ``held_id`` when given), preferring the decoded orientation class among
    near-ties.
    """
    if not (0 <= decoded.u < HEATMAP_SIZE and 0 <= decoded.v < HEATMAP_SIZE):
        raise PositionOutsideGrid(f"decoded cell ({decoded.u}, {decoded.v})")
    x, y = xy_from_grid(decoded.u, decoded.v)
    if phase == "pick":
        best_id, best_d = None, None
        for pid in non_blocked(state):
            px, py, _ = state.get(pid).position
            d = float(np.hypot(px - x, py - y))
            if d <= SNAP_RADIUS and (best_d is None or d < best_d):
                best_id, best_d = pid, d
        if best_id is None:
            raise NoNearbyPrimitive(f"no pickable primitive near ({x:.2f}, {y:.2f})")
        return best_id
    if phase != "place":
        raise ValueError(f"unknown phase {phase!r}")
    best_action, best_key = None, None
    for action in enumerate_actions(state):
        if held_id is not None and action.pick_id != held_id:
            continue
        ax, ay, _ = action.place_position
        d = float(np.hypot(ax - x, ay - y))
        if d > SNAP_RADIUS:
            continue
        mismatch = orientation_index(action.orientation) != decoded.orientation
        key = (round(d, 6), mismatch)
        if best_key is None or key < best_key:
            best_action, best_key = action, key
    if best_action is None:
        raise NoNearbyPlacement(f"no valid placement near ({x:.2f}, {y:.2f})")
    return best_action


def _as_state_actions(entry) -> tuple[WorldState, list[AssemblyAction], dict]:
    if isinstance(entry, dict):
        state = state_from_dict(entry["state"])
        actions = [
            AssemblyAction(a["pick_id"], tuple(a["place_position"]), a["orientation"])
            for a in entry["actions"]
        ]
        meta = {k: entry[k] for k in ("key", "depth", "instance") if k in entry}
        return state, actions, meta
    state, actions = entry
    return state, list(actions), {}


def _observe(state, phase, held_id, camera, backend, augment_cfg, seed):
    obs = render(state, phase, held_id, camera=camera, backend=backend)
    if augment_cfg:
        obs = augment(
            obs,
            bernoulli_p=augment_cfg.get("bernoulli_p", 0.0),
            extent_noise=augment_cfg.get("extent_noise", 0.0),
            seed=seed,
            backend=backend,
        )
    return obs


def build_dpi(
    entries: list,
    perturbations_per_state: int = 0,
    seed: int = 0,
    augment_cfg: dict | None = None,
    goal_states: Iterable[WorldState] = (),
    camera: CameraModel = DEFAULT_CAMERA,
    backend: str | None = None,
) -> list[PolicySample]:
    """Observation-heatmap pairs from demonstration (state, action set) pairs.

    Per entry: one pick sample over all pick positions, then one place sample
    per distinct picked primitive showing that piece held and its placement
    targets. Each entry state and each goal state additionally contributes
    ``perturbations_per_state`` corrective pairs: a random legal move is
    applied and the sample is labeled with the action that exactly undoes it.
    """
    rng = np.random.default_rng(seed)
    samples: list[PolicySample] = []

    def emit(state, phase, held_id, actions, meta):
        hm = encode_heatmap(actions, phase, state)
        obs = _observe(
            state, phase, held_id, camera, backend, augment_cfg, seed + len(samples)
        )
        meta = dict(meta, phase=phase, action_count=len(actions))
        if held_id is not None:
            meta["held_id"] = held_id
        samples.append(PolicySample(obs, hm, meta))

    def corrective(state, base_meta):
        for _ in range(perturbations_per_state):
            action = sample_action(state, rng)
            if action is None:
                continue
            try:
                perturbed = apply_action(state, action)
            except WorldError:
                continue
            undo = invert_action(state, action)
            meta = dict(base_meta, kind="corrective")
            emit(perturbed, "pick", None, [undo], meta)
            emit(perturbed, "place", undo.pick_id, [undo], meta)

    for index, entry in enumerate(entries):
        state, actions, meta = _as_state_actions(entry)
        meta = dict(meta, entry=index, kind="demo")
        meta.setdefault("key", canonical_key(state).text)
        emit(state, "pick", None, actions, meta)
        for pid in sorted({a.pick_id for a in actions}):
            placements = [a for a in actions if a.pick_id == pid]
            emit(state, "place", pid, placements, meta)
        corrective(state, dict(meta, kind="corrective"))
    for index, goal in enumerate(goal_states):
        meta = {"entry": len(entries) + index, "kind": "corrective", "goal": True}
        meta["key"] = canonical_key(goal).text
        corrective(goal, meta)
    return samples


def write_dpi(samples: list[PolicySample], out_dir: str | Path, header: dict | None = None) -> Path:
    """D_pi directory: index.jsonl plus one blob trio per sample."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    head = {"schema_version": SCHEMA_VERSION, "samples": len(samples)}
    if header:
        head.update(header)
    lines.append(json.dumps(head, sort_keys=True, separators=(",", ":")))
    for i, sample in enumerate(samples):
        depth_path = f"sample_{i:06d}_depth.f32"
        seg_path = f"sample_{i:06d}_seg.u8"
        hm_path = f"sample_{i:06d}_heatmap.f32"
        save_array(out / depth_path, sample.observation.depth)
        save_array(out / seg_path, sample.observation.seg)
        save_array(out / hm_path, sample.heatmap.grid.astype(np.float32))
        record = {
            "index": i,
            "phase": sample.heatmap.kind,
            "depth": depth_path,
            "seg": seg_path,
            "heatmap": hm_path,
            "meta": sample.meta,
        }
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))
    (out / "index.jsonl").write_text("\n".join(lines) + "\n")
    return out


def read_dpi_index(dpi_dir: str | Path) -> tuple[dict, list[dict]]:
    lines = Path(dpi_dir, "index.jsonl").read_text().splitlines()
    header = json.loads(lines[0])
    return header, [json.loads(line) for line in lines[1:]]


def load_dpi_sample(dpi_dir: str | Path, record: dict) -> dict:
    base = Path(dpi_dir)
    depth, _ = load_array(base / record["depth"])
    seg, _ = load_array(base / record["seg"])
    heatmap, _ = load_array(base / record["heatmap"])
    return {
        "depth": depth,
        "seg": seg,
        "heatmap": heatmap,
        "phase": record["phase"],
        "meta": record["meta"],
    }
