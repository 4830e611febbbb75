"""Dev harness: sweep gamma/expansions/epochs and report greedy win rates."""

from __future__ import annotations

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from blockassembly.scenes import (
    materialize_pieces,
    sample_buildable_set,
    scatter_pieces,
    scattered_instance,
)
from blockassembly.shapes import ArchSpec, classify, enumerate_category
from blockassembly.value import build_value_dataset, greedy_rollout, train_value

spec = ArchSpec(height=3)
instances = enumerate_category(spec)


def eval_exact(net, rng, n=15):
    wins = 0
    for _ in range(n):
        inst = instances[int(rng.integers(len(instances)))]
        pieces = materialize_pieces(inst, rng)
        state = scatter_pieces(pieces, spec.workspace, rng)
        final, steps, _ok = greedy_rollout(net, state, spec)
        wins += classify(final, spec) is not None
    return wins


def eval_random(net, rng, n=15):
    wins = 0
    for _ in range(n):
        pieces, _ = sample_buildable_set(spec, rng)
        state = scatter_pieces(pieces, spec.workspace, rng)
        final, steps, _ok = greedy_rollout(net, state, spec)
        wins += classify(final, spec) is not None
    return wins


def main():
    for gamma in (0.8, 0.95):
        for exp, ep in ((2, 30), (2, 60)):
            t0 = time.time()
            rng = np.random.default_rng(7)
            ds = build_value_dataset(
                instances, spec, rng, min_pairs=20_000,
                expansions_per_state=exp, gamma=gamma,
            )
            net, hist = train_value(ds, epochs=ep, seed=0)
            erng = np.random.default_rng(123)
            ex = eval_exact(net, erng)
            rd = eval_random(net, erng)
            dt = time.time() - t0
            print(
                f"gamma={gamma} exp={exp} ep={ep}: kept={ds.meta['kept']} "
                f"loss={hist[-1]:.4f} exact={ex}/15 random={rd}/15 ({dt:.0f}s)",
                flush=True,
            )


if __name__ == "__main__":
    main()
