"""Per-height nets on full-disassembly data, plus fresh baseline timings."""

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
from blockassembly.value import greedy_rollout, train_category_value

CAP = 4000
BUDGET = SearchBudget(max_env_steps=CAP, mcts=MctsConfig(50, 1.4, 8))


def baselines():
    for h in (3, 4, 5):
        spec = ArchSpec(h)
        for method in ("random", "mcts"):
            rng = np.random.default_rng(900 + h)
            wins = []
            censored = []
            t0 = time.time()
            n = 10
            for ep in range(n):
                pieces, _ = sample_buildable_set(spec, rng)
                state = scatter_pieces(pieces, spec.workspace, rng)
                if method == "random":
                    rep = random_explore(state, spec, BUDGET, 900 + h * 31 + ep)
                else:
                    rep = mcts_search(state, spec, BUDGET, 900 + h * 31 + ep)
                if rep.success:
                    wins.append(rep.env_steps)
                censored.append(rep.env_steps if rep.success else CAP)
            dt = time.time() - t0
            wm = f"{np.mean(wins):.0f}" if wins else "-"
            print(
                f"H={h} {method}: wins={len(wins)}/{n} mean={wm}"
                f" censored={np.mean(censored):.0f} {dt / n:.2f}s/ep",
                flush=True,
            )


def probe(tag, **kw):
    for h in (3, 4, 5):
        spec = ArchSpec(h)
        t0 = time.time()
        net, metrics = train_category_value(
            list(enumerate_category(spec)), spec, seed=0, **kw
        )
        ttrain = time.time() - t0
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
        teval = time.time() - t0
        om = float(np.mean(ours)) if ours else float("nan")
        gm = float(np.mean(oracle))
        print(
            f"{tag} H={h}: wins={wins}/{n} ours={om:.2f} oracle={gm:.2f}"
            f" ratio={om / gm:.3f} train={ttrain:.0f}s eval={teval:.0f}s"
            f" loss={metrics[-1]['final_loss']:.4f}",
            flush=True,
        )


def main():
    baselines()
    probe(
        "A70",
        rounds=5,
        min_pairs=35_000,
        epochs=70,
        lr=1e-3,
        lr_final=1.5e-4,
        policy_frac=0.5,
        gamma=0.8,
    )
    print("DONE", flush=True)


if __name__ == "__main__":
    main()
