"""Dev harness: greedy win rate and step counts per arch height."""

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
from blockassembly.shapes import ArchSpec, classify, enumerate_category
from blockassembly.value import build_value_dataset, greedy_rollout, train_value


def main():
    for height in (3, 4, 5):
        spec = ArchSpec(height=height)
        instances = enumerate_category(spec)
        t0 = time.time()
        rng = np.random.default_rng(7)
        ds = build_value_dataset(instances, spec, rng, min_pairs=20_000)
        t_data = time.time() - t0
        net, hist = train_value(ds, epochs=30, seed=0)
        t_train = time.time() - t0 - t_data
        erng = np.random.default_rng(123)
        wins = 0
        ratios = []
        for _ in range(30):
            pieces, _ = sample_buildable_set(spec, erng)
            oracle = min(
                len(inst.targets) for inst in buildable_instances(spec, pieces)
            )
            state = scatter_pieces(pieces, spec.workspace, erng)
            final, steps, ok = greedy_rollout(net, state, spec)
            wins += ok
            if ok:
                ratios.append(steps / oracle)
        mean_ratio = float(np.mean(ratios)) if ratios else float("nan")
        print(
            f"H={height}: insts={len(instances)} kept={ds.meta['kept']} "
            f"loss={hist[-1]:.4f} wins={wins}/30 ours/oracle={mean_ratio:.3f} "
            f"(data {t_data:.0f}s train {t_train:.0f}s)",
            flush=True,
        )


if __name__ == "__main__":
    main()
