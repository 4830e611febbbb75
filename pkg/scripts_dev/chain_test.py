"""Dev harness: best-config category training with the chain-expansion data."""

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


def evaluate(net, spec, erng, n=50):
    wins = 0
    ratios = []
    step_means = []
    for _ in range(n):
        pieces, _ = sample_buildable_set(spec, erng)
        oracle = min(len(inst.targets) for inst in buildable_instances(spec, pieces))
        state = scatter_pieces(pieces, spec.workspace, erng)
        _final, steps, ok = greedy_rollout(net, state, spec)
        wins += ok
        if ok:
            ratios.append(steps / oracle)
            step_means.append(steps)
    ratio = float(np.mean(ratios)) if ratios else float("nan")
    return wins, ratio


def main():
    spec = ArchSpec(height=3)
    instances = enumerate_category(spec)
    t0 = time.time()
    net, metrics = train_category_value(
        instances,
        spec,
        rounds=5,
        seed=0,
        min_pairs=35_000,
        epochs=40,
        lr=1e-3,
        lr_final=2.5e-4,
        policy_frac=0.5,
        gamma=0.8,
    )
    t_train = time.time() - t0
    erng = np.random.default_rng(123)
    wins, ratio = evaluate(net, spec, erng, n=50)
    print(
        f"chain code 35k/40ep/pf0.5/taper: wins={wins}/50 ratio={ratio:.3f} "
        f"loss={metrics[-1]['final_loss']:.4f} ({t_train:.0f}s)",
        flush=True,
    )


if __name__ == "__main__":
    main()
