"""Dev harness: chain-data configs, ratio-of-means accounting, 100 episodes."""

from __future__ import annotations

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from blockassembly.scenes import (
    buildable_instances,
    sample_buildable_set,
    scatter_pieces,
)
from blockassembly.shapes import ArchSpec, enumerate_category
from blockassembly.value import greedy_rollout, train_category_value


def evaluate(net, spec, erng, n=100):
    wins = 0
    ours_steps = []
    oracle_steps = []
    for _ in range(n):
        pieces, _ = sample_buildable_set(spec, erng)
        oracle = min(len(inst.targets) for inst in buildable_instances(spec, pieces))
        oracle_steps.append(oracle)
        state = scatter_pieces(pieces, spec.workspace, erng)
        _final, steps, ok = greedy_rollout(net, state, spec)
        wins += ok
        if ok:
            ours_steps.append(steps)
    ours_mean = float(np.mean(ours_steps)) if ours_steps else float("nan")
    oracle_mean = float(np.mean(oracle_steps))
    return wins, n, ours_mean, oracle_mean


def main():
    spec = ArchSpec(height=3)
    instances = enumerate_category(spec)
    for epochs, lr_final in ((40, 2.5e-4), (70, 1.5e-4)):
        t0 = time.time()
        net, metrics = train_category_value(
            instances,
            spec,
            rounds=5,
            seed=0,
            min_pairs=35_000,
            epochs=epochs,
            lr=1e-3,
            lr_final=lr_final,
            policy_frac=0.5,
            gamma=0.8,
        )
        t_train = time.time() - t0
        erng = np.random.default_rng(123)
        wins, n, ours_mean, oracle_mean = evaluate(net, spec, erng, n=100)
        print(
            f"ep={epochs} lrf={lr_final}: wins={wins}/{n} "
            f"ours_mean={ours_mean:.2f} oracle_mean={oracle_mean:.2f} "
            f"ratio={ours_mean / oracle_mean:.3f} "
            f"loss={metrics[-1]['final_loss']:.4f} ({t_train:.0f}s)",
            flush=True,
        )
    print("DONE", flush=True)


if __name__ == "__main__":
    main()
