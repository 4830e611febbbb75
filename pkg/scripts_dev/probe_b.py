"""Probe the candidate final config (min_pairs=20k, epochs=150, hidden=256).

Mirrors the steps-table episode sampling so numbers line up with the real
benchmark. Prints per-round kept/loss, then per-height eval with the excess
step histogram over oracle for winning episodes.
"""

from __future__ import annotations

import time
from collections import Counter

import numpy as np

from blockassembly.scenes import sample_buildable_set, scatter_pieces
from blockassembly.search import oracle_steps
from blockassembly.shapes import ArchSpec, enumerate_category
from blockassembly.value import greedy_rollout, train_category_value

SEED = 0
EPISODES = 100


def probe(height: int) -> None:
    spec = ArchSpec(height)
    instances = list(enumerate_category(spec))
    t0 = time.perf_counter()
    net, metrics = train_category_value(
        instances,
        spec,
        rounds=5,
        seed=SEED,
        min_pairs=20_000,
        epochs=150,
        lr=1e-3,
        lr_final=1e-4,
        batch=256,
        hidden=256,
        expansions_per_state=2,
        policy_frac=0.5,
        gamma=0.8,
    )
    t_train = time.perf_counter() - t0
    for m in metrics:
        print(
            f"  H={height} round={m['round']} kept={m['dataset_kept']}"
            f" loss={m['final_loss']:.5f}",
            flush=True,
        )
    rng = np.random.default_rng(SEED + 97 * height)
    sets = [sample_buildable_set(spec, rng)[0] for _ in range(EPISODES)]
    t1 = time.perf_counter()
    wins = 0
    ours_steps = []
    oracle_all = []
    excess = Counter()
    for ep, pieces in enumerate(sets):
        n_oracle = oracle_steps(spec, pieces)
        oracle_all.append(n_oracle)
        ep_rng = np.random.default_rng(SEED + 1000 * height + ep)
        state = scatter_pieces(pieces, spec.workspace, ep_rng)
        _, steps, ok = greedy_rollout(net, state, spec)
        if ok:
            wins += 1
            ours_steps.append(steps)
            excess[steps - n_oracle] += 1
    t_eval = time.perf_counter() - t1
    ours_mean = float(np.mean(ours_steps)) if ours_steps else float("nan")
    oracle_mean = float(np.mean(oracle_all))
    print(
        f"B20 H={height}: wins={wins}/{EPISODES} ours={ours_mean:.2f}"
        f" oracle={oracle_mean:.2f} ratio={ours_mean / oracle_mean:.3f}"
        f" train={t_train:.0f}s eval={t_eval:.0f}s",
        flush=True,
    )
    print(f"  H={height} excess={dict(sorted(excess.items()))}", flush=True)


for h in (3, 4, 5):
    probe(h)
print("DONE", flush=True)
