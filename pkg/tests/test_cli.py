"""Command-line behavior: artifacts, determinism, error reporting."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from blockassembly.cli import main
from blockassembly.config import ExperimentConfig, save_config
from blockassembly.heatmaps import encode_heatmap
from blockassembly.mlp import ValueMLP
from blockassembly.tensorio import save_array
from blockassembly.world import AssemblyAction


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_enumerate_counts(capsys):
    for height, expect in ((3, 4), (4, 16), (5, 49)):
        code, out, _ = run_cli(capsys, "enumerate", "--task", "arch", "--height", height)
        assert code == 0
        payload = json.loads(out)
        assert payload["count"] == expect
        assert len(payload["labels"]) == expect


def test_enumerate_artifact(tmp_path, capsys):
    out = tmp_path / "arch3.json"
    code, _, _ = run_cli(
        capsys, "enumerate", "--task", "arch", "--height", 3, "--out", out
    )
    assert code == 0
    record = json.loads(out.read_text())
    assert record["count"] == 4
    assert "config_hash" in record and record["seed"] == 0


def test_unmake_writes_demos_and_reruns_identically(tmp_path, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        code, _, _ = run_cli(
            capsys, "unmake", "--task", "tower", "--height", 3, "--seed", 5, "--out", out
        )
        assert code == 0
    blob_a = (out_a / "demos.jsonl").read_bytes()
    assert blob_a == (out_b / "demos.jsonl").read_bytes()
    header = json.loads(blob_a.splitlines()[0])
    assert header["pairs"] > 0 and "config_hash" in header


def test_train_value_tiny(tmp_path, capsys):
    out = tmp_path / "net"
    code, stdout, _ = run_cli(
        capsys,
        "train-value",
        "--heights", "3",
        "--rounds", 1,
        "--min-pairs", 300,
        "--epochs", 2,
        "--out", out,
    )
    assert code == 0
    payload = json.loads(stdout)
    assert payload["final_loss"] > 0
    net = ValueMLP.load(str(out / "net_h3.ckpt"))
    assert net.in_dim == 117
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["heights"] == [3] and len(metrics["rounds"]) == 1


def test_steps_table_oracle_only(tmp_path, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        code, _, _ = run_cli(
            capsys,
            "steps-table",
            "--heights", "3",
            "--methods", "oracle",
            "--episodes", 3,
            "--seed", 2,
            "--out", out,
        )
        assert code == 0
    csv_a = (out_a / "steps_table.csv").read_bytes()
    assert csv_a == (out_b / "steps_table.csv").read_bytes()
    assert csv_a.startswith(b"height,method,")
    report = json.loads((out_a / "steps_table.json").read_text())
    (cell,) = report["cells"]
    assert cell["method"] == "oracle" and cell["success_rate"] == 1.0


def test_steps_table_ours_needs_nets(tmp_path, capsys):
    code, _, err = run_cli(
        capsys,
        "steps-table",
        "--heights", "3",
        "--methods", "ours",
        "--episodes", 1,
        "--out", tmp_path / "t",
    )
    assert code == 2
    assert json.loads(err)["error"] == "WorldError"


def test_steps_table_unknown_method(tmp_path, capsys):
    code, _, err = run_cli(
        capsys,
        "steps-table",
        "--methods", "quantum",
        "--episodes", 1,
        "--out", tmp_path / "t",
    )
    assert code == 2
    assert "quantum" in json.loads(err)["message"]


def test_gen_policy_data_deterministic(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code, _, _ = run_cli(
            capsys,
            "gen-policy-data",
            "--task", "tower",
            "--height", 2,
            "--paths-per-instance", 1,
            "--perturbations-per-state", 0,
            "--seed", 3,
            "--out", out,
        )
        assert code == 0
        outs.append(out)
    index_a = (outs[0] / "index.jsonl").read_bytes()
    assert index_a == (outs[1] / "index.jsonl").read_bytes()
    first = json.loads(index_a.splitlines()[1])
    blob = first["heatmap"]
    assert (outs[0] / blob).read_bytes() == (outs[1] / blob).read_bytes()


def test_render_artifacts(tmp_path, capsys):
    out = tmp_path / "scene"
    code, stdout, _ = run_cli(
        capsys, "render", "--task", "arch", "--height", 3, "--seed", 1, "--out", out
    )
    assert code == 0
    payload = json.loads(stdout)
    assert Path(payload["depth"]).exists()
    sidecar = json.loads((out / "depth.f32.json").read_text())
    assert sidecar["shape"] == [256, 256]


def test_decode_heatmaps_round_trip(tmp_path, capsys):
    actions = [
        AssemblyAction(0, (4.5, 4.5, 0.5), "along_x"),
        AssemblyAction(1, (11.5, 12.5, 0.5), "along_y"),
    ]
    hm = encode_heatmap(actions, "place")
    path = tmp_path / "hm.f32"
    save_array(path, hm.grid)
    code, stdout, _ = run_cli(
        capsys, "decode-heatmaps", "--kind", "place", "--top-k", 2, "--inputs", path
    )
    assert code == 0
    peaks = json.loads(stdout)["results"][0]["peaks"]
    cells = {(p["u"], p["v"]) for p in peaks}
    assert cells == {(18, 18), (46, 50)}
    orients = {(p["u"], p["v"]): p["orientation"] for p in peaks}
    assert orients[(18, 18)] == 0 and orients[(46, 50)] == 1


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    save_config(ExperimentConfig(gamma=0.9, paths_per_instance=2), cfg_path)
    out = tmp_path / "demos"
    code, _, _ = run_cli(
        capsys,
        "unmake",
        "--task", "tower",
        "--height", 2,
        "--config", cfg_path,
        "--gamma", 0.5,
        "--out", out,
    )
    assert code == 0
    lines = (out / "demos.jsonl").read_text().splitlines()
    entries = [json.loads(line) for line in lines[1:]]
    # depth-1 entries carry gamma**1 from the flag, not the config file
    values = {e["depth"]: e["value"] for e in entries}
    assert values[1] == pytest.approx(0.5)
    header = json.loads(lines[0])
    # two paths per instance from the config file survive alongside the flag
    assert header["pairs"] == 2 * 2


def test_invalid_config_reports_json_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"no_such_key": 1}')
    code, _, err = run_cli(
        capsys, "unmake", "--task", "tower", "--height", 2,
        "--config", bad, "--out", tmp_path / "x",
    )
    assert code == 2
    assert json.loads(err)["error"] == "ConfigError"


def test_eval_oracle_policy_subprocess(tmp_path, capsys):
    code, stdout, _ = run_cli(
        capsys,
        "eval-oracle-policy",
        "--task", "tower",
        "--height", 2,
        "--episodes", 2,
        "--seed", 4,
        "--out", tmp_path / "eval",
    )
    assert code == 0
    payload = json.loads(stdout)
    assert payload["success_rate"] == 1.0
    report = json.loads(Path(payload["server_report"]).read_text())
    assert report["episodes"] == 2


def test_serve_eval_reports_client_hangup(tmp_path):
    proc = subprocess.run(
        [
            sys.executable, "-m", "blockassembly.cli", "serve-eval",
            "--task", "tower", "--height", "2", "--episodes", "1",
            "--out", str(tmp_path / "srv"),
        ],
        input="",
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 2
    assert json.loads(proc.stderr)["error"] == "ProtocolError"
    first = json.loads(proc.stdout.splitlines()[0])
    assert first["type"] == "obs" and first["phase"] == "pick"
