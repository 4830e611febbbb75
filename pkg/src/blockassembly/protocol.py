"""Closed-loop evaluation over newline-delimited JSON on stdio.

The server owns the simulator. Per step it renders the scene, writes the
depth and segmentation tensors to files, and sends an ``obs`` message with
their paths; the client answers with an ``action`` message carrying a 64-grid
cell and an orientation class. Pick and place phases alternate strictly; a
reply of any other shape ends the session with a protocol error. Episodes
end when the shape classifier fires or the step budget runs out, each
reported by a ``result`` message.

With debug heatmaps enabled the server also writes the ground-truth action
heatmap beside every observation. The oracle client drives the loop from
exactly those files, which exercises decode, snap and simulation with no
network in between.
"""

from __future__ import annotations

import json
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .heatmaps import (
    DecodedPeak,
    Heatmap,
    decode_heatmap,
    encode_heatmap,
    snap_decoded_action,
)
from .render import CameraModel, DEFAULT_CAMERA, render
from .scenes import assembled_state, materialize_pieces, scatter_pieces
from .shapes import ArchSpec, TowerSpec, classify, enumerate_category
from .tensorio import load_array, save_array
from .unmake import build_class_actions, build_graph, matching_actions
from .world import (
    MAX_PRIMITIVES,
    WorldError,
    WorldState,
    apply_action,
    canonical_key,
    enumerate_actions,
)

PROTOCOL_VERSION = 1
DEFAULT_MAX_STEPS = 2 * MAX_PRIMITIVES


class ProtocolError(RuntimeError):
    pass


def spec_for(task: str, height: int) -> ArchSpec | TowerSpec:
    if task == "arch":
        return ArchSpec(height)
    if task == "tower":
        return TowerSpec(height)
    raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class EpisodeResult:
    episode: int
    success: bool
    steps: int


class OracleHeatmaps:
    """Ground-truth heatmaps from the category's pooled disassembly actions."""

    def __init__(self, spec: ArchSpec | TowerSpec, rng: np.random.Generator):
        graphs = []
        for instance in enumerate_category(spec):
            root = assembled_state(instance, spec.workspace, None)
            graphs.append(build_graph(root, spec, rng))
        self.class_actions = build_class_actions(graphs)

    def actions_for(self, state: WorldState) -> list:
        sigs = self.class_actions.get(canonical_key(state).text, ())
        actions = []
        seen = set()
        for sig in sigs:
            for act in matching_actions(state, sig):
                if act.signature() not in seen:
                    seen.add(act.signature())
                    actions.append(act)
        if not actions:
            actions = enumerate_actions(state)
        return actions

    def heatmap(self, state: WorldState, phase: str, held_id: int | None) -> Heatmap:
        actions = self.actions_for(state)
        if phase == "place":
            held = [a for a in actions if a.pick_id == held_id]
            return encode_heatmap(held or actions, "place")
        return encode_heatmap(actions, "pick", state)


class EvalServer:
    """Serves `episodes` closed-loop episodes over a line-based transport."""

    def __init__(
        self,
        spec: ArchSpec | TowerSpec,
        episodes: int,
        seed: int,
        out_dir: str | Path,
        in_stream,
        out_stream,
        max_steps: int = DEFAULT_MAX_STEPS,
        debug_heatmaps: bool = False,
        camera: CameraModel = DEFAULT_CAMERA,
        header: dict | None = None,
    ):
        self.spec = spec
        self.episodes = episodes
        self.seed = seed
        self.out_dir = Path(out_dir)
        self.in_stream = in_stream
        self.out_stream = out_stream
        self.max_steps = max_steps
        self.camera = camera
        self.header = dict(header or {})
        self.rng = np.random.default_rng(seed)
        self.oracle = OracleHeatmaps(spec, self.rng) if debug_heatmaps else None
        self.instances = enumerate_category(spec)

    # ------------------------------------------------------------- transport

    def _send(self, message: dict) -> None:
        self.out_stream.write(json.dumps(message, sort_keys=True) + "\n")
        self.out_stream.flush()

    def _recv_action(self) -> DecodedPeak:
        line = self.in_stream.readline()
        if not line:
            raise ProtocolError("client closed the stream mid-episode")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"client sent invalid JSON: {exc}") from exc
        if not isinstance(message, dict) or message.get("type") != "action":
            raise ProtocolError(f"expected an action message, got {message!r}")
        try:
            u, v = int(message["u"]), int(message["v"])
            orientation = int(message["orientation"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed action fields in {message!r}") from exc
        return DecodedPeak(u, v, orientation, 1.0)

    # -------------------------------------------------------------- episodes

    def _episode_start(self, episode: int) -> WorldState:
        inst = self.instances[int(self.rng.integers(len(self.instances)))]
        pieces = materialize_pieces(inst, None)
        return scatter_pieces(pieces, self.spec.workspace, self.rng)

    def _observe(self, episode, step, phase, state, held_id):
        obs = render(state, phase, held_id, camera=self.camera)
        stem = f"ep{episode:03d}_step{step:02d}_{phase}"
        depth_path = self.out_dir / f"{stem}_depth.f32"
        seg_path = self.out_dir / f"{stem}_seg.u8"
        save_array(depth_path, obs.depth, meta=self.header)
        save_array(seg_path, obs.seg, meta=self.header)
        message = {
            "type": "obs",
            "episode": episode,
            "step": step,
            "phase": phase,
            "depth_path": str(depth_path),
            "seg_path": str(seg_path),
        }
        if self.oracle is not None:
            hm = self.oracle.heatmap(state, phase, held_id)
            hm_path = self.out_dir / f"{stem}_heatmap.f32"
            save_array(hm_path, hm.grid.astype(np.float32), meta=self.header)
            message["heatmap_path"] = str(hm_path)
        self._send(message)

    def _run_episode(self, episode: int) -> EpisodeResult:
        state = self._episode_start(episode)
        steps = 0
        success = bool(classify(state, self.spec))
        while not success and steps < self.max_steps:
            self._observe(episode, steps, "pick", state, None)
            pick_reply = self._recv_action()
            try:
                pick_id = snap_decoded_action(state, pick_reply, "pick")
            except WorldError:
                break
            self._observe(episode, steps, "place", state, pick_id)
            place_reply = self._recv_action()
            try:
                action = snap_decoded_action(state, place_reply, "place", held_id=pick_id)
                state = apply_action(state, action)
            except WorldError:
                break
            steps += 1
            success = bool(classify(state, self.spec))
        return EpisodeResult(episode, success, steps)

    def run(self) -> dict:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        results = []
        for episode in range(self.episodes):
            result = self._run_episode(episode)
            results.append(result)
            self._send(
                {
                    "type": "result",
                    "episode": result.episode,
                    "success": result.success,
                    "steps": result.steps,
                }
            )
        successes = [r for r in results if r.success]
        report = dict(self.header)
        report.update(
            {
                "protocol_version": PROTOCOL_VERSION,
                "episodes": self.episodes,
                "successes": len(successes),
                "success_rate": len(successes) / self.episodes if self.episodes else 0.0,
                "mean_steps_success": (
                    float(np.mean([r.steps for r in successes])) if successes else None
                ),
            }
        )
        report_path = self.out_dir / "report.json"
        report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        return report


# ------------------------------------------------------------------ clients


def oracle_reply(message: dict) -> dict:
    """Top-1 decode of the ground-truth heatmap referenced by an obs message."""
    if "heatmap_path" not in message:
        raise ProtocolError("oracle client needs debug heatmaps from the server")
    grid, _ = load_array(message["heatmap_path"])
    hm = Heatmap(np.asarray(grid, dtype=np.float32), message["phase"])
    peaks = decode_heatmap(hm, 1)
    if not peaks:
        raise ProtocolError(f"ground-truth heatmap {message['heatmap_path']} is empty")
    peak = peaks[0]
    return {"type": "action", "u": peak.u, "v": peak.v, "orientation": peak.orientation}


def drive_client(reader, writer, reply_fn, episodes: int) -> list[EpisodeResult]:
    """Reads obs messages, answers via ``reply_fn``, collects episode results."""
    results: list[EpisodeResult] = []
    while len(results) < episodes:
        line = reader.readline()
        if not line:
            raise ProtocolError("server closed the stream early")
        message = json.loads(line)
        if message.get("type") == "obs":
            reply = reply_fn(message)
            writer.write(json.dumps(reply) + "\n")
            writer.flush()
        elif message.get("type") == "result":
            results.append(
                EpisodeResult(
                    int(message.get("episode", len(results))),
                    bool(message["success"]),
                    int(message["steps"]),
                )
            )
        else:
            raise ProtocolError(f"unexpected server message {message!r}")
    return results


def run_oracle_eval(
    task: str,
    height: int,
    episodes: int,
    seed: int,
    out_dir: str | Path,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> dict:
    """Spawns a serve-eval subprocess and drives it from ground-truth heatmaps."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    argv = [
        sys.executable,
        "-m",
        "blockassembly.cli",
        "serve-eval",
        "--task",
        task,
        "--height",
        str(height),
        "--episodes",
        str(episodes),
        "--seed",
        str(seed),
        "--max-steps",
        str(max_steps),
        "--out",
        str(out_dir / "server"),
        "--debug-heatmaps",
    ]
    proc = subprocess.Popen(
        argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True
    )
    try:
        results = drive_client(proc.stdout, proc.stdin, oracle_reply, episodes)
    finally:
        proc.stdin.close()
        proc.wait(timeout=60)
    if proc.returncode != 0:
        raise ProtocolError(f"serve-eval exited with status {proc.returncode}")
    successes = [r for r in results if r.success]
    return {
        "episodes": episodes,
        "successes": len(successes),
        "success_rate": len(successes) / episodes if episodes else 0.0,
        "mean_steps_success": (
            float(np.mean([r.steps for r in successes])) if successes else None
        ),
        "server_report": str(out_dir / "server" / "report.json"),
    }
