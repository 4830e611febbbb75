"""Command line: train on a demonstration directory, evaluate closed-loop,
decode heatmap blobs for parity checks."""

from __future__ import annotations

import argparse
import functools
import json
import sys

import numpy as np
import torch

from .client import ProtocolError, eval_closed_loop, net_reply, oracle_reply
from .config import ConfigError, TrainerConfig, load_config
from .decode import decode_grid
from .dpi import SchemaError, load_blob
from .train import DivergedError, load_checkpoint, train_policy


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_train(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = TrainerConfig(
            seed=args.seed,
            lr=args.lr,
            epochs=args.epochs,
            batch=args.batch,
            base_channels=args.base_channels,
            val_frac=args.val_frac,
            bernoulli_p=args.bernoulli_p,
        )
    metrics = train_policy(args.dpi, cfg, args.out)
    _emit(
        {
            "checkpoint": str(args.out) + "/policy.pt",
            "final_train_mse": metrics["final_train_mse"],
            "val_top1_within_one_cell": metrics["val_top1_within_one_cell"],
            "samples": metrics["samples"],
        }
    )
    return 0


def cmd_eval(args) -> int:
    if args.oracle:
        reply_fn = oracle_reply
    else:
        if not args.checkpoint:
            raise ConfigError("--checkpoint is required unless --oracle is set")
        net, _ = load_checkpoint(args.checkpoint)
        reply_fn = functools.partial(net_reply, net)
    report = eval_closed_loop(
        reply_fn,
        args.task,
        args.height,
        args.episodes,
        args.seed,
        args.out,
        max_steps=args.max_steps,
        debug_heatmaps=args.oracle,
    )
    _emit(report)
    return 0


def cmd_decode(args) -> int:
    results = []
    for path in args.inputs:
        grid = load_blob(path).astype(np.float32)
        peaks = decode_grid(grid, args.top_k)
        results.append(
            {
                "input": str(path),
                "peaks": [
                    {"u": p.u, "v": p.v, "orientation": p.orientation, "score": p.score}
                    for p in peaks
                ],
            }
        )
    _emit({"results": results})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="policytrainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit the heatmap net on a demo directory")
    p.add_argument("--dpi", required=True, help="demonstration directory")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=2.5e-4)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--base-channels", type=int, default=24)
    p.add_argument("--val-frac", type=float, default=0.1)
    p.add_argument("--bernoulli-p", type=float, default=0.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="closed-loop evaluation over the protocol")
    p.add_argument("--task", required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--max-steps", type=int, default=18)
    p.add_argument("--checkpoint", default=None)
    p.add_argument(
        "--oracle",
        action="store_true",
        help="answer from the server's debug heatmaps instead of a net",
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("decode", help="print peaks of stored heatmap blobs")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--top-k", type=int, default=1)
    p.set_defaults(func=cmd_decode)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigError,
        SchemaError,
        ProtocolError,
        DivergedError,
        OSError,
        ValueError,
    ) as exc:
        error = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(error), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
