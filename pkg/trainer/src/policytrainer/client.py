"""Closed-loop evaluation client speaking the stdio protocol.

The simulator side is a separate process (`serve-eval`); the only shared
state is the NDJSON stream plus the tensor files the server names in its
observation messages.
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import torch

from .decode import decode_grid
from .dpi import encode_input, load_blob


class ProtocolError(RuntimeError):
    pass


def reply_from_grid(grid: np.ndarray) -> dict:
    """Top-1 peak as an action message; global argmax if nothing clears the
    peak threshold, so every observation gets exactly one reply."""
    peaks = decode_grid(grid, 1)
    if peaks:
        p = peaks[0]
        return {"type": "action", "u": p.u, "v": p.v, "orientation": p.orientation}
    v, u = np.unravel_index(int(np.argmax(grid[0])), grid[0].shape)
    orientation = int(np.argmax(grid[1:4, v, u]))
    return {"type": "action", "u": int(u), "v": int(v), "orientation": orientation}


def net_reply(net: torch.nn.Module, message: dict) -> dict:
    depth = load_blob(message["depth_path"])
    seg = load_blob(message["seg_path"])
    x = torch.from_numpy(encode_input(depth, seg))
    with torch.no_grad():
        pred = net(x[None]).numpy()[0]
    return reply_from_grid(np.clip(pred, 0.0, 1.0).astype(np.float32))


def oracle_reply(message: dict) -> dict:
    """Decode of the server's ground-truth heatmap; harness upper bound."""
    if "heatmap_path" not in message:
        raise ProtocolError("server did not send debug heatmaps")
    grid = load_blob(message["heatmap_path"]).astype(np.float32)
    return reply_from_grid(grid)


def run_episodes(reader, writer, reply_fn, episodes: int) -> list[dict]:
    results: list[dict] = []
    while len(results) < episodes:
        line = reader.readline()
        if not line:
            raise ProtocolError("server closed the stream early")
        message = json.loads(line)
        kind = message.get("type")
        if kind == "obs":
            writer.write(json.dumps(reply_fn(message)) + "\n")
            writer.flush()
        elif kind == "result":
            results.append(message)
        else:
            raise ProtocolError(f"unexpected server message {message!r}")
    return results


def eval_closed_loop(
    reply_fn,
    task: str,
    height: int,
    episodes: int,
    seed: int,
    out_dir: str | Path,
    max_steps: int = 18,
    debug_heatmaps: bool = False,
) -> dict:
    """Spawns the simulator's protocol server and drives every episode."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    argv = [
        sys.executable,
        "-m",
        "blockassembly.cli",
        "serve-eval",
        "--task", task,
        "--height", str(height),
        "--episodes", str(episodes),
        "--seed", str(seed),
        "--max-steps", str(max_steps),
        "--out", str(out / "server"),
    ]
    if debug_heatmaps:
        argv.append("--debug-heatmaps")
    proc = subprocess.Popen(
        argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True
    )
    try:
        results = run_episodes(proc.stdout, proc.stdin, reply_fn, episodes)
    finally:
        proc.stdin.close()
        proc.wait(timeout=120)
    if proc.returncode != 0:
        raise ProtocolError(f"serve-eval exited with status {proc.returncode}")
    successes = [r for r in results if r["success"]]
    report = {
        "task": task,
        "height": height,
        "episodes": episodes,
        "successes": len(successes),
        "success_rate": len(successes) / episodes if episodes else 0.0,
        "mean_steps_success": (
            float(np.mean([r["steps"] for r in successes])) if successes else None
        ),
        "server_report": str(out / "server" / "report.json"),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return report
