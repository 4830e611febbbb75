"""Closed-loop evaluation protocol: server, oracle client, transport rules."""

from __future__ import annotations

import io
import json
import os
import threading

import numpy as np
import pytest

from blockassembly.protocol import (
    DEFAULT_MAX_STEPS,
    EvalServer,
    OracleHeatmaps,
    ProtocolError,
    drive_client,
    oracle_reply,
    spec_for,
)
from blockassembly.heatmaps import decode_heatmap
from blockassembly.scenes import materialize_pieces, scatter_pieces
from blockassembly.shapes import ArchSpec, TowerSpec, enumerate_category
from blockassembly.world import canonical_key


def run_closed_loop(spec, episodes, seed, out_dir, reply_fn):
    """Server in a thread, client on this one, both over OS pipes."""
    s2c_r, s2c_w = os.pipe()
    c2s_r, c2s_w = os.pipe()
    server_in = os.fdopen(c2s_r, "r")
    server_out = os.fdopen(s2c_w, "w")
    client_in = os.fdopen(s2c_r, "r")
    client_out = os.fdopen(c2s_w, "w")
    server = EvalServer(
        spec,
        episodes=episodes,
        seed=seed,
        out_dir=out_dir,
        in_stream=server_in,
        out_stream=server_out,
        debug_heatmaps=True,
    )
    failures = []

    def serve():
        try:
            server.run()
        except Exception as exc:  # surfaced after join
            failures.append(exc)
        finally:
            server_out.close()
            server_in.close()

    thread = threading.Thread(target=serve)
    thread.start()
    try:
        results = drive_client(client_in, client_out, reply_fn, episodes)
    finally:
        client_out.close()
        client_in.close()
        thread.join(timeout=60)
    assert not failures, failures
    return results


def test_spec_for_tasks():
    assert isinstance(spec_for("arch", 4), ArchSpec)
    assert isinstance(spec_for("tower", 5), TowerSpec)
    with pytest.raises(ValueError):
        spec_for("bridge", 3)


def test_oracle_loop_tower3(tmp_path):
    results = run_closed_loop(TowerSpec(3), 3, 5, tmp_path, oracle_reply)
    assert [r.success for r in results] == [True, True, True]
    assert [r.steps for r in results] == [3, 3, 3]
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["success_rate"] == 1.0
    assert report["episodes"] == 3
    assert report["mean_steps_success"] == 3.0


def test_oracle_loop_arch3(tmp_path):
    results = run_closed_loop(ArchSpec(3), 2, 9, tmp_path, oracle_reply)
    assert all(r.success for r in results)
    assert all(r.steps >= 3 for r in results)


def test_obs_phases_alternate(tmp_path):
    seen = []

    def spy(message):
        seen.append((message["episode"], message["step"], message["phase"]))
        return oracle_reply(message)

    run_closed_loop(TowerSpec(2), 1, 3, tmp_path, spy)
    assert seen == [(0, 0, "pick"), (0, 0, "place"), (0, 1, "pick"), (0, 1, "place")]


def test_obs_files_exist_and_load(tmp_path):
    messages = []

    def spy(message):
        messages.append(message)
        return oracle_reply(message)

    run_closed_loop(TowerSpec(2), 1, 3, tmp_path, spy)
    first = messages[0]
    from blockassembly.tensorio import load_array

    depth, _ = load_array(first["depth_path"])
    seg, _ = load_array(first["seg_path"])
    hm, _ = load_array(first["heatmap_path"])
    assert depth.shape == (256, 256) and seg.shape == (256, 256)
    assert hm.shape == (4, 64, 64)


def test_failed_pick_snap_ends_episode(tmp_path):
    spec = TowerSpec(3)
    # replicate the server's deterministic episode start to find an empty cell
    probe = EvalServer(spec, 1, 17, tmp_path / "probe", io.StringIO(), io.StringIO())
    state = probe._episode_start(0)
    taken = {(p.position[0], p.position[1]) for p in state.primitives}

    def far_cell():
        for x in range(16):
            for y in range(16):
                cx, cy = x + 0.5, y + 0.5
                if all((cx - px) ** 2 + (cy - py) ** 2 > 9.0 for px, py in taken):
                    return cx, cy
        raise AssertionError("no empty cell far from every piece")

    cx, cy = far_cell()
    reply = {"type": "action", "u": int(cx * 4), "v": int(cy * 4), "orientation": 0}
    out = io.StringIO()
    server = EvalServer(
        spec,
        episodes=1,
        seed=17,
        out_dir=tmp_path,
        in_stream=io.StringIO(json.dumps(reply) + "\n"),
        out_stream=out,
    )
    report = server.run()
    assert report["successes"] == 0
    lines = [json.loads(line) for line in out.getvalue().splitlines()]
    assert lines[-1] == {"type": "result", "episode": 0, "success": False, "steps": 0}


def test_recv_action_validation(tmp_path):
    def server_with(text):
        return EvalServer(
            TowerSpec(2), 1, 0, tmp_path, io.StringIO(text), io.StringIO()
        )

    with pytest.raises(ProtocolError):
        server_with("")._recv_action()
    with pytest.raises(ProtocolError):
        server_with("not json\n")._recv_action()
    with pytest.raises(ProtocolError):
        server_with('{"type": "obs"}\n')._recv_action()
    with pytest.raises(ProtocolError):
        server_with('{"type": "action", "u": 3}\n')._recv_action()
    with pytest.raises(ProtocolError):
        server_with('{"type": "action", "u": "x", "v": 0, "orientation": 0}\n')._recv_action()
    peak = server_with('{"type": "action", "u": 8, "v": 9, "orientation": 2}\n')._recv_action()
    assert (peak.u, peak.v, peak.orientation) == (8, 9, 2)


def test_oracle_reply_needs_heatmap():
    with pytest.raises(ProtocolError):
        oracle_reply({"type": "obs", "phase": "pick", "depth_path": "x", "seg_path": "y"})


def test_drive_client_stream_rules():
    with pytest.raises(ProtocolError):
        drive_client(io.StringIO(""), io.StringIO(), oracle_reply, 1)
    with pytest.raises(ProtocolError):
        drive_client(
            io.StringIO('{"type": "bogus"}\n'), io.StringIO(), oracle_reply, 1
        )


def test_oracle_heatmaps_on_and_off_graph():
    spec = TowerSpec(3)
    oracle = OracleHeatmaps(spec, np.random.default_rng(0))
    (inst,) = enumerate_category(spec)
    pieces = materialize_pieces(inst, None)
    state = scatter_pieces(pieces, spec.workspace, np.random.default_rng(2))
    # scattered-start key is on the graph and offers exactly the first move
    assert canonical_key(state).text in oracle.class_actions
    actions = oracle.actions_for(state)
    assert len(actions) == 1
    x, y, z = actions[0].place_position
    assert (x, y, z) == (7.5, 8.5, 0.5)
    hm = oracle.heatmap(state, "pick", None)
    peaks = decode_heatmap(hm, 1)
    held = state.get(actions[0].pick_id)
    assert (peaks[0].u / 4, peaks[0].v / 4) == (held.position[0], held.position[1])


def test_rerun_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    run_closed_loop(TowerSpec(3), 2, 21, out_a, oracle_reply)
    run_closed_loop(TowerSpec(3), 2, 21, out_b, oracle_reply)
    report_a = (out_a / "report.json").read_bytes()
    report_b = (out_b / "report.json").read_bytes()
    assert report_a == report_b
    blob = "ep000_step00_pick_depth.f32"
    assert (out_a / blob).read_bytes() == (out_b / blob).read_bytes()


def test_max_steps_bound():
    assert DEFAULT_MAX_STEPS == 18
