"""Timing and parity comparison of the two renderer backends.

The compiled extension and the vectorized fallback share one ray casting
contract; this script times both on identical scenes and verifies that
their outputs agree to float32 round-off.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from blockassembly.render import HAVE_COMPILED, render
from blockassembly.scenes import assembled_state, sample_buildable_set, scatter_pieces
from blockassembly.shapes import ArchSpec, enumerate_category


def build_scenes(count: int, seed: int):
    spec = ArchSpec(5)
    rng = np.random.default_rng(seed)
    scenes = []
    instances = enumerate_category(spec)
    for i in range(count):
        if i % 2 == 0:
            inst = instances[int(rng.integers(len(instances)))]
            scenes.append(assembled_state(inst, spec.workspace, rng))
        else:
            pieces, _ = sample_buildable_set(spec, rng)
            scenes.append(scatter_pieces(pieces, spec.workspace, rng))
    return scenes


def time_backend(scenes, backend: str, repeats: int) -> float:
    start = time.perf_counter()
    for _ in range(repeats):
        for state in scenes:
            render(state, "pick", backend=backend)
    elapsed = time.perf_counter() - start
    return elapsed / (repeats * len(scenes))


def check_parity(scenes) -> tuple[float, int]:
    worst = 0.0
    seg_mismatch = 0
    for state in scenes:
        a = render(state, "pick", backend="compiled")
        b = render(state, "pick", backend="numpy")
        worst = max(worst, float(np.max(np.abs(a.depth - b.depth))))
        seg_mismatch += int(np.sum(a.seg != b.seg))
    return worst, seg_mismatch


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenes", type=int, default=20)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    scenes = build_scenes(args.scenes, args.seed)
    t_np = time_backend(scenes, "numpy", args.repeats)
    print(f"numpy fallback : {t_np * 1000:8.2f} ms/frame")
    if not HAVE_COMPILED:
        print("compiled extension not built; skipping comparison")
        return 0
    t_cy = time_backend(scenes, "compiled", args.repeats)
    print(f"compiled       : {t_cy * 1000:8.2f} ms/frame")
    print(f"speedup        : {t_np / t_cy:8.2f}x")
    worst, mismatches = check_parity(scenes)
    print(f"max |depth diff|: {worst:.2e} m, seg mismatches: {mismatches}")
    if worst > 1e-5 or mismatches:
        print("PARITY FAILURE")
        return 1
    print("parity OK")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
