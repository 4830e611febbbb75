"""Command-line entry points for datasets, training, evaluation and serving.

Every command takes --seed and --out; artifacts embed the configuration hash
and seed so a rerun with the same pair reproduces them byte for byte. Errors
leave a single machine-readable JSON object on stderr and a nonzero exit
status.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, artifact_header, load_config
from .heatmaps import Heatmap, build_dpi, decode_heatmap, write_dpi
from .mlp import ValueMLP
from .protocol import DEFAULT_MAX_STEPS, EvalServer, ProtocolError, run_oracle_eval, spec_for
from .render import render
from .scenes import assembled_state, materialize_pieces, scatter_pieces
from .search import MctsConfig, SearchBudget, steps_table, write_table_csv, write_table_json
from .shapes import ArchSpec, enumerate_category
from .tensorio import load_array, save_array
from .unmake import build_demos
from .value import train_category_value, train_multiheight_value
from .world import WorldError


def _config_for(args, **overrides) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    updates = {}
    for name in fields:
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = value
    updates.update({k: v for k, v in overrides.items() if v is not None})
    return dataclasses.replace(cfg, **updates)


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- commands


def cmd_enumerate(args) -> int:
    spec = spec_for(args.task, args.height)
    instances = enumerate_category(spec)
    payload = {
        "task": args.task,
        "height": args.height,
        "count": len(instances),
        "labels": [inst.label for inst in instances],
    }
    if args.out:
        cfg = _config_for(args)
        record = dict(artifact_header(cfg, args.seed), **payload)
        Path(args.out).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    _emit(payload)
    return 0


def cmd_unmake(args) -> int:
    cfg = _config_for(
        args,
        task=args.task,
        heights=(args.height,) if args.task == "arch" else None,
        tower_height=args.height if args.task == "tower" else None,
    )
    spec = spec_for(args.task, args.height)
    rng = np.random.default_rng(args.seed)
    entries, stats = build_demos(
        spec, rng, paths_per_instance=cfg.paths_per_instance, gamma=cfg.gamma
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = dict(artifact_header(cfg, args.seed), **stats)
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    lines += [json.dumps(e, sort_keys=True, separators=(",", ":")) for e in entries]
    (out / "demos.jsonl").write_text("\n".join(lines) + "\n")
    _emit({"out": str(out / "demos.jsonl"), **stats})
    return 0


def _save_net(net: ValueMLP, metrics, cfg, seed, out: Path, heights) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for h in heights:
        path = out / f"net_h{h}.ckpt"
        net.save(str(path))
        paths.append(str(path))
    report = dict(artifact_header(cfg, seed), heights=list(heights), rounds=metrics)
    (out / "metrics.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return {"checkpoints": paths, "metrics": str(out / "metrics.json")}


def cmd_train_value(args) -> int:
    heights = tuple(int(h) for h in args.heights.split(","))
    cfg = _config_for(args, task=args.task, heights=heights)
    out = Path(args.out)
    common = dict(
        rounds=cfg.rounds,
        seed=args.seed,
        min_pairs=cfg.min_pairs,
        epochs=cfg.epochs,
        lr=cfg.lr,
        lr_final=cfg.lr_final,
        batch=cfg.batch,
        hidden=cfg.hidden,
        expansions_per_state=cfg.expansions_per_state,
        policy_frac=cfg.policy_frac,
        gamma=cfg.gamma,
    )
    if len(heights) == 1:
        spec = ArchSpec(heights[0])
        net, metrics = train_category_value(enumerate_category(spec), spec, **common)
    else:
        pairs = [(ArchSpec(h), enumerate_category(ArchSpec(h))) for h in heights]
        net, metrics = train_multiheight_value(pairs, **common)
    payload = _save_net(net, metrics, cfg, args.seed, out, heights)
    payload["final_loss"] = metrics[-1]["final_loss"]
    _emit(payload)
    return 0


def cmd_steps_table(args) -> int:
    heights = tuple(int(h) for h in args.heights.split(","))
    methods = tuple(args.methods.split(","))
    cfg = _config_for(args, heights=heights, episodes=args.episodes)
    nets = None
    if "ours" in methods:
        if not args.nets_dir:
            raise WorldError("steps-table with method 'ours' needs --nets-dir")
        nets = {}
        for h in heights:
            path = Path(args.nets_dir) / f"net_h{h}.ckpt"
            if not path.exists():
                raise WorldError(f"missing checkpoint {path}")
            nets[h] = ValueMLP.load(str(path))
    budget = SearchBudget(
        max_env_steps=cfg.max_env_steps,
        mcts=MctsConfig(
            simulations_per_move=cfg.mcts_simulations,
            uct_c=cfg.mcts_uct_c,
            rollout_depth=cfg.mcts_rollout_depth,
        ),
    )
    report = steps_table(
        heights, methods, episodes=cfg.episodes, seed=args.seed, nets=nets, budget=budget
    )
    report.update(artifact_header(cfg, args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_table_csv(report, str(out / "steps_table.csv"))
    write_table_json(report, str(out / "steps_table.json"))
    _emit(
        {
            "csv": str(out / "steps_table.csv"),
            "json": str(out / "steps_table.json"),
            "cells": report["cells"],
        }
    )
    return 0


def cmd_gen_policy_data(args) -> int:
    cfg = _config_for(
        args,
        task=args.task,
        heights=(args.height,) if args.task == "arch" else None,
        tower_height=args.height if args.task == "tower" else None,
    )
    spec = spec_for(args.task, args.height)
    rng = np.random.default_rng(args.seed)
    entries, stats = build_demos(
        spec, rng, paths_per_instance=cfg.paths_per_instance, gamma=cfg.gamma
    )
    goals = [assembled_state(inst, spec.workspace, None) for inst in enumerate_category(spec)]
    augment_cfg = None
    if cfg.bernoulli_p > 0.0 or cfg.extent_noise > 0.0:
        augment_cfg = {"bernoulli_p": cfg.bernoulli_p, "extent_noise": cfg.extent_noise}
    samples = build_dpi(
        entries,
        perturbations_per_state=cfg.perturbations_per_state,
        seed=args.seed,
        augment_cfg=augment_cfg,
        goal_states=goals,
    )
    write_dpi(samples, args.out, header=dict(artifact_header(cfg, args.seed), **stats))
    _emit({"out": str(args.out), "samples": len(samples), "demo_pairs": stats["pairs"]})
    return 0


def cmd_render(args) -> int:
    cfg = _config_for(args, task=args.task)
    spec = spec_for(args.task, args.height)
    instances = enumerate_category(spec)
    rng = np.random.default_rng(args.seed)
    inst = instances[int(rng.integers(len(instances)))]
    if args.scene == "assembled":
        state = assembled_state(inst, spec.workspace, None)
    else:
        pieces = materialize_pieces(inst, None)
        state = scatter_pieces(pieces, spec.workspace, rng)
    obs = render(state, "pick")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = artifact_header(cfg, args.seed)
    save_array(out / "depth.f32", obs.depth, meta=header)
    save_array(out / "seg.u8", obs.seg, meta=header)
    _emit(
        {
            "depth": str(out / "depth.f32"),
            "seg": str(out / "seg.u8"),
            "instance": inst.label,
            "scene": args.scene,
        }
    )
    return 0


def cmd_serve_eval(args) -> int:
    cfg = _config_for(
        args,
        task=args.task,
        heights=(args.height,) if args.task == "arch" else None,
        tower_height=args.height if args.task == "tower" else None,
    )
    spec = spec_for(args.task, args.height)
    server = EvalServer(
        spec,
        episodes=args.episodes,
        seed=args.seed,
        out_dir=args.out,
        in_stream=sys.stdin,
        out_stream=sys.stdout,
        max_steps=args.max_steps,
        debug_heatmaps=args.debug_heatmaps,
        header=artifact_header(cfg, args.seed),
    )
    server.run()
    return 0


def cmd_eval_oracle_policy(args) -> int:
    report = run_oracle_eval(
        args.task,
        args.height,
        episodes=args.episodes,
        seed=args.seed,
        out_dir=args.out,
        max_steps=args.max_steps,
    )
    _emit(report)
    return 0


def cmd_decode_heatmaps(args) -> int:
    results = []
    for path in args.inputs:
        grid, _ = load_array(path)
        hm = Heatmap(np.asarray(grid, dtype=np.float32), args.kind)
        peaks = decode_heatmap(hm, args.top_k)
        results.append(
            {
                "path": path,
                "peaks": [
                    {"u": p.u, "v": p.v, "orientation": p.orientation, "score": p.score}
                    for p in peaks
                ],
            }
        )
    payload = {"results": results, "top_k": args.top_k}
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _emit(payload)
    return 0


# ------------------------------------------------------------------ parser


def _add_common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=out_required)
    p.add_argument("--config", default=None, help="JSON experiment config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockassembly")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="list category instances")
    p.add_argument("--task", choices=("arch", "tower"), default="arch")
    p.add_argument("--height", type=int, required=True)
    _add_common(p, out_required=False)
    p.set_defaults(fn=cmd_enumerate)

    p = sub.add_parser("unmake", help="disassembly demonstration dataset")
    p.add_argument("--task", choices=("arch", "tower"), default="arch")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--paths-per-instance", dest="paths_per_instance", type=int)
    p.add_argument("--gamma", type=float)
    _add_common(p)
    p.set_defaults(fn=cmd_unmake)

    p = sub.add_parser("train-value", help="train the greedy builder's value net")
    p.add_argument("--task", choices=("arch", "multi-height"), default="arch")
    p.add_argument("--heights", default="3", help="comma-separated arch heights")
    p.add_argument("--rounds", type=int)
    p.add_argument("--min-pairs", dest="min_pairs", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-final", dest="lr_final", type=float)
    p.add_argument("--policy-frac", dest="policy_frac", type=float)
    p.add_argument("--gamma", type=float)
    _add_common(p)
    p.set_defaults(fn=cmd_train_value)

    p = sub.add_parser("steps-table", help="steps-to-build comparison table")
    p.add_argument("--heights", default="3,4,5")
    p.add_argument("--methods", default="random,mcts,ours,oracle")
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--nets-dir", dest="nets_dir", default=None)
    p.add_argument("--max-env-steps", dest="max_env_steps", type=int)
    p.add_argument("--mcts-simulations", dest="mcts_simulations", type=int)
    _add_common(p)
    p.set_defaults(fn=cmd_steps_table)

    p = sub.add_parser("gen-policy-data", help="observation-heatmap dataset")
    p.add_argument("--task", choices=("arch", "tower"), default="arch")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--paths-per-instance", dest="paths_per_instance", type=int)
    p.add_argument(
        "--perturbations-per-state", dest="perturbations_per_state", type=int
    )
    p.add_argument("--bernoulli-p", dest="bernoulli_p", type=float)
    p.add_argument("--extent-noise", dest="extent_noise", type=float)
    _add_common(p)
    p.set_defaults(fn=cmd_gen_policy_data)

    p = sub.add_parser("render", help="render one scene to tensor files")
    p.add_argument("--task", choices=("arch", "tower"), default="arch")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--scene", choices=("scattered", "assembled"), default="scattered")
    _add_common(p)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("serve-eval", help="closed-loop protocol server on stdio")
    p.add_argument("--task", choices=("arch", "tower"), default="arch")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=DEFAULT_MAX_STEPS)
    p.add_argument("--debug-heatmaps", dest="debug_heatmaps", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_serve_eval)

    p = sub.add_parser("eval-oracle-policy", help="closed loop from ground-truth heatmaps")
    p.add_argument("--task", choices=("arch", "tower"), default="arch")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=DEFAULT_MAX_STEPS)
    _add_common(p)
    p.set_defaults(fn=cmd_eval_oracle_policy)

    p = sub.add_parser("decode-heatmaps", help="decode heatmap tensor files to peaks")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--top-k", dest="top_k", type=int, default=3)
    p.add_argument("--kind", choices=("pick", "place"), default="pick")
    _add_common(p, out_required=False)
    p.set_defaults(fn=cmd_decode_heatmaps)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (WorldError, ConfigError, ProtocolError, OSError, ValueError) as exc:
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
