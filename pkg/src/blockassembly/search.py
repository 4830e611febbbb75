"""Random exploration and MCTS baselines, plus the steps-to-build table.

Both baselines act in the same action space as the greedy value policy.
``env_steps`` counts every simulator transition a method consumes, including
transitions inside the MCTS tree and its rollouts; the greedy policy's
internal successor evaluations are not environment interaction (they play
the role of training-time simulation) so its count is the number of executed
actions. Table cells aggregate over successful episodes only, with the
success rate reported alongside.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .scenes import buildable_instances, sample_buildable_set, scatter_pieces
from .shapes import ArchSpec, TowerSpec, classify, completion_score
from .value import greedy_rollout
from .world import (
    MAX_PRIMITIVES,
    WorldState,
    apply_action,
    enumerate_actions,
    sample_action,
)


@dataclass(frozen=True)
class MctsConfig:
    simulations_per_move: int = 50
    uct_c: float = 1.4
    rollout_depth: int = 8

    def __post_init__(self):
        if self.simulations_per_move <= 0 or self.rollout_depth <= 0:
            raise ValueError("MCTS budgets must be positive")
        if self.uct_c < 0:
            raise ValueError("uct_c must be non-negative")


@dataclass(frozen=True)
class SearchBudget:
    max_env_steps: int = 4000
    mcts: MctsConfig = field(default_factory=MctsConfig)

    def __post_init__(self):
        if self.max_env_steps < 0:
            raise ValueError("max_env_steps must be non-negative")


@dataclass(frozen=True)
class EpisodeReport:
    method: str
    success: bool
    env_steps: int
    wall_time: float
    seed: int


class _Stepper:
    """Counts simulator transitions and enforces the step budget."""

    def __init__(self, budget: int):
        self.budget = budget
        self.count = 0

    def exhausted(self) -> bool:
        return self.count >= self.budget

    def apply(self, state: WorldState, action) -> WorldState:
        self.count += 1
        return apply_action(state, action)


def random_explore(
    state: WorldState,
    spec: ArchSpec | TowerSpec,
    budget: SearchBudget,
    seed: int = 0,
) -> EpisodeReport:
    """Uniform random actions until the classifier fires or the budget ends."""
    rng = np.random.default_rng(seed)
    stepper = _Stepper(budget.max_env_steps)
    t0 = time.perf_counter()
    success = classify(state, spec)
    while not success and not stepper.exhausted():
        actions = enumerate_actions(state)
        if not actions:
            break
        state = stepper.apply(state, actions[int(rng.integers(len(actions)))])
        success = classify(state, spec)
    return EpisodeReport(
        "random", bool(success), stepper.count, time.perf_counter() - t0, seed
    )


class _Node:
    __slots__ = ("state", "parent", "children", "untried", "visits", "value_sum", "terminal")

    def __init__(self, state: WorldState, parent: _Node | None):
        self.state = state
        self.parent = parent
        self.children: list[tuple[object, _Node]] = []
        self.untried = list(enumerate_actions(state))
        self.visits = 1
        self.value_sum = 0.0
        self.terminal = False

    def q(self) -> float:
        return self.value_sum / self.visits


def _uct_child(node: _Node, c: float) -> _Node:
    log_n = math.log(node.visits)
    best, best_score = None, -math.inf
    for _, child in node.children:
        score = child.q() + c * math.sqrt(log_n / child.visits)
        if score > best_score:
            best, best_score = child, score
    assert best is not None
    return best


def _rollout(
    state: WorldState,
    spec: ArchSpec | TowerSpec,
    depth: int,
    rng: np.random.Generator,
    stepper: _Stepper,
) -> float:
    """Random playout scored by shape completion at the end.

    Rollout moves are rejection-sampled rather than enumerated; the playout
    is only a value probe, so the cheaper near-uniform draw is fine.
    """
    for _ in range(depth):
        if stepper.exhausted():
            break
        action = sample_action(state, rng)
        if action is None:
            break
        state = stepper.apply(state, action)
    return completion_score(state, spec, feasible_only=True)


def _run_simulations(
    root: _Node,
    spec: ArchSpec | TowerSpec,
    cfg: MctsConfig,
    rng: np.random.Generator,
    stepper: _Stepper,
) -> None:
    for _ in range(cfg.simulations_per_move):
        if stepper.exhausted():
            break
        node = root
        while not node.untried and node.children and not node.terminal:
            node = _uct_child(node, cfg.uct_c)
        created = False
        if node.untried and not node.terminal:
            pick = int(rng.integers(len(node.untried)))
            action = node.untried.pop(pick)
            child_state = stepper.apply(node.state, action)
            child = _Node(child_state, node)
            child.terminal = bool(classify(child_state, spec))
            node.children.append((action, child))
            node = child
            created = True
        if node.terminal:
            value = 1.0
        else:
            # The playout explores beyond the leaf but random moves tend to
            # bury partial structures, so the leaf's own completion is kept
            # as a floor on the estimate. Scoring against feasible instances
            # only keeps the reward reachable for the pieces at hand.
            value = max(
                completion_score(node.state, spec, feasible_only=True),
                _rollout(node.state, spec, cfg.rollout_depth, rng, stepper),
            )
        # A fresh node's visits=1 already stands for this simulation;
        # revisited leaves and every ancestor count it explicitly.
        if not created:
            node.visits += 1
        node.value_sum += value
        walk: _Node | None = node
        while walk.parent is not None:
            walk = walk.parent
            walk.visits += 1
            walk.value_sum += value


def mcts_search(
    state: WorldState,
    spec: ArchSpec | TowerSpec,
    budget: SearchBudget,
    seed: int = 0,
) -> EpisodeReport:
    """UCT search committing the most-visited action after each move's
    simulations; the shape completion score evaluates leaves."""
    rng = np.random.default_rng(seed)
    cfg = budget.mcts
    stepper = _Stepper(budget.max_env_steps)
    t0 = time.perf_counter()
    moves_cap = 2 * MAX_PRIMITIVES
    success = classify(state, spec)
    for _ in range(moves_cap):
        if success or stepper.exhausted():
            break
        root = _Node(state, None)
        _run_simulations(root, spec, cfg, rng, stepper)
        if not root.children:
            break
        action, best = max(
            root.children, key=lambda pair: (pair[1].visits, pair[1].q())
        )
        state = best.state
        success = bool(classify(state, spec))
    return EpisodeReport(
        "mcts", bool(success), stepper.count, time.perf_counter() - t0, seed
    )


def oracle_steps(
    spec: ArchSpec | TowerSpec,
    pieces: list[tuple[float, tuple[float, float, float]]],
) -> int:
    """Fewest primitives over the instances buildable from the piece set."""
    feasible = buildable_instances(spec, pieces)
    if not feasible:
        raise ValueError("piece set cannot build any instance")
    return min(len(inst.targets) for inst in feasible)


def _ours_episode(
    net,
    state: WorldState,
    spec: ArchSpec | TowerSpec,
    seed: int,
) -> EpisodeReport:
    t0 = time.perf_counter()
    _, steps, ok = greedy_rollout(net, state, spec)
    return EpisodeReport("ours", ok, steps, time.perf_counter() - t0, seed)


def steps_table(
    heights: tuple[int, ...],
    methods: tuple[str, ...],
    episodes: int,
    seed: int,
    nets: dict[int, object] | None = None,
    budget: SearchBudget | None = None,
) -> dict:
    """Mean and std of steps to build per (height, method) over fresh sets.

    ``mean_steps`` averages successful episodes only; ``mean_steps_censored``
    counts every failed episode at the step budget, making it a lower bound
    on the method's true expected steps. ``nets`` maps height to a trained
    value net (or any state->value callable) and is required when "ours" is
    among the methods. Unbuildable draws are resampled inside the sampler and
    the resample count is logged.
    """
    budget = budget or SearchBudget()
    known = {"random", "mcts", "ours", "oracle"}
    unknown = set(methods) - known
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    if "ours" in methods and not nets:
        raise ValueError('"ours" requires trained nets per height')
    cells = []
    for height in heights:
        spec = ArchSpec(height=height)
        rng = np.random.default_rng(seed + 97 * height)
        sets = []
        resamples = 0
        for _ in range(episodes):
            pieces, tries = sample_buildable_set(spec, rng)
            resamples += tries
            sets.append(pieces)
        for method in methods:
            steps_ok: list[int] = []
            censored: list[int] = []
            n_ok = 0
            for ep, pieces in enumerate(sets):
                ep_seed = seed + 1000 * height + ep
                if method == "oracle":
                    n = oracle_steps(spec, pieces)
                    steps_ok.append(n)
                    censored.append(n)
                    n_ok += 1
                    continue
                ep_rng = np.random.default_rng(ep_seed)
                state = scatter_pieces(pieces, spec.workspace, ep_rng)
                if method == "random":
                    rep = random_explore(state, spec, budget, ep_seed)
                elif method == "mcts":
                    rep = mcts_search(state, spec, budget, ep_seed)
                else:
                    rep = _ours_episode(nets[height], state, spec, ep_seed)
                if rep.success:
                    n_ok += 1
                    steps_ok.append(rep.env_steps)
                    censored.append(rep.env_steps)
                else:
                    # Steps to build exceed the budget; the budget itself is
                    # recorded as a right-censored lower bound.
                    censored.append(budget.max_env_steps)
            cells.append(
                {
                    "height": height,
                    "method": method,
                    "episodes": episodes,
                    "success_rate": n_ok / episodes,
                    "mean_steps": float(np.mean(steps_ok)) if steps_ok else None,
                    "std_steps": float(np.std(steps_ok)) if steps_ok else None,
                    "mean_steps_censored": float(np.mean(censored)),
                    "resamples": resamples,
                }
            )
    return {
        "heights": list(heights),
        "methods": list(methods),
        "episodes": episodes,
        "seed": seed,
        "budget": {
            "max_env_steps": budget.max_env_steps,
            "simulations_per_move": budget.mcts.simulations_per_move,
            "uct_c": budget.mcts.uct_c,
            "rollout_depth": budget.mcts.rollout_depth,
        },
        "cells": cells,
    }


def write_table_csv(report: dict, path: str) -> None:
    fields = [
        "height",
        "method",
        "episodes",
        "success_rate",
        "mean_steps",
        "std_steps",
        "mean_steps_censored",
        "resamples",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for cell in report["cells"]:
            writer.writerow({k: cell[k] for k in fields})


def write_table_json(report: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
