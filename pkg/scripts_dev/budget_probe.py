"""Measure baseline step distributions, then a joint multi-height net."""

from __future__ import annotations

import time

import numpy as np

from blockassembly.scenes import sample_buildable_set, scatter_pieces
from blockassembly.search import (
    MctsConfig,
    SearchBudget,
    mcts_search,
    oracle_steps,
    random_explore,
)
from blockassembly.shapes import ArchSpec, enumerate_category
from blockassembly.value import greedy_rollout, train_multiheight_value

EPISODES = 30
CAP = 4000
BUDGET = SearchBudget(max_env_steps=CAP, mcts=MctsConfig(50, 1.4, 8))


def cell(spec, method, seed):
    rng = np.random.default_rng(seed)
    steps = []
    oks = []
    t0 = time.time()
    for ep in range(EPISODES):
        pieces, _ = sample_buildable_set(spec, rng)
        state = scatter_pieces(pieces, spec.workspace, rng)
        if method == "random":
            rep = random_explore(state, spec, BUDGET, seed + ep)
        else:
            rep = mcts_search(state, spec, BUDGET, seed + ep)
        steps.append(rep.env_steps)
        oks.append(rep.success)
    dt = time.time() - t0
    for cap in (1500, 2000, 4000):
        wins = [s for s, ok in zip(steps, oks) if ok and s <= cap]
        line = (
            f"H={spec.height} {method} cap={cap}: wins={len(wins)}/{EPISODES}"
            f" mean={np.mean(wins):.0f}" if wins else
            f"H={spec.height} {method} cap={cap}: wins=0/{EPISODES} mean=-"
        )
        print(line, flush=True)
    print(f"  ({dt:.0f}s total, {dt/EPISODES:.2f}s/ep at cap {CAP})", flush=True)


def main():
    for h in (3, 4, 5):
        spec = ArchSpec(h)
        for method in ("random", "mcts"):
            cell(spec, method, 500 + 31 * h)

    print("training joint net...", flush=True)
    t0 = time.time()
    pairs = [(ArchSpec(h), enumerate_category(ArchSpec(h))) for h in (3, 4, 5)]
    net, metrics = train_multiheight_value(
        pairs,
        rounds=5,
        seed=0,
        min_pairs=36_000,
        epochs=70,
        lr=1e-3,
        lr_final=1.5e-4,
        policy_frac=0.5,
        gamma=0.8,
    )
    dt = time.time() - t0
    print(f"trained in {dt:.0f}s loss={metrics[-1]['final_loss']:.4f}", flush=True)

    for h in (3, 4, 5):
        spec = ArchSpec(h)
        rng = np.random.default_rng(123)
        ours = []
        oracle = []
        wins = 0
        n = 100
        t0 = time.time()
        for _ in range(n):
            pieces, _ = sample_buildable_set(spec, rng)
            oracle.append(oracle_steps(spec, pieces))
            state = scatter_pieces(pieces, spec.workspace, rng)
            _, steps, ok = greedy_rollout(net, state, spec)
            if ok:
                wins += 1
                ours.append(steps)
        dt = time.time() - t0
        om = float(np.mean(ours)) if ours else float("nan")
        gm = float(np.mean(oracle))
        print(
            f"H={h} ours: wins={wins}/{n} ours_mean={om:.2f}"
            f" oracle_mean={gm:.2f} ratio={om/gm:.3f} ({dt:.0f}s)",
            flush=True,
        )
    print("DONE", flush=True)


if __name__ == "__main__":
    main()
