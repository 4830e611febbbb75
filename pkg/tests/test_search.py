"""Tests for the random and MCTS baselines and the steps table."""

from __future__ import annotations

import json

import numpy as np
import pytest

from blockassembly.scenes import scatter_pieces
from blockassembly.search import (
    EpisodeReport,
    MctsConfig,
    SearchBudget,
    _Node,
    _run_simulations,
    _Stepper,
    mcts_search,
    oracle_steps,
    random_explore,
    steps_table,
    write_table_csv,
    write_table_json,
)
from blockassembly.shapes import (
    ArchSpec,
    TowerSpec,
    classify,
    completion_score,
    enumerate_category,
)
from blockassembly.scenes import assembled_state, materialize_pieces
from blockassembly.world import (
    COLOR_BY_NAME,
    WorldState,
    apply_action,
    canonical_key,
    enumerate_actions,
)

GREEN = COLOR_BY_NAME["green"]
YELLOW = COLOR_BY_NAME["yellow"]


def tower1_scene(pieces):
    spec = TowerSpec(1)
    rng = np.random.default_rng(5)
    return spec, scatter_pieces(pieces, spec.workspace, rng)


def absorption_oracle(state, spec):
    """(success probability, mean steps given success) for uniform random play.

    Builds the canonical-key state graph exhaustively and solves the absorbing
    Markov chain equations; independent of the search implementation. States
    with no legal action are failure sinks, classified states are goals.
    """
    keys = {canonical_key(state).text: 0}
    reps = [state]
    rows = {}
    frontier = [state]
    while frontier:
        s = frontier.pop()
        i = keys[canonical_key(s).text]
        if i in rows:
            continue
        if classify(s, spec):
            rows[i] = "goal"
            continue
        succ = []
        for action in enumerate_actions(s):
            nxt = apply_action(s, action)
            key = canonical_key(nxt).text
            if key not in keys:
                keys[key] = len(reps)
                reps.append(nxt)
                frontier.append(nxt)
            succ.append(keys[key])
        rows[i] = succ or "dead"
    transient = sorted(i for i, r in rows.items() if isinstance(r, list))
    pos = {i: k for k, i in enumerate(transient)}
    n = len(transient)
    a = np.eye(n)
    b = np.zeros(n)
    for i in transient:
        succ = rows[i]
        w = 1.0 / len(succ)
        for j in succ:
            if rows[j] == "goal":
                b[pos[i]] += w
            elif isinstance(rows[j], list):
                a[pos[i], pos[j]] -= w
    p = np.linalg.solve(a, b)
    h = np.linalg.solve(a, p)
    if rows[0] == "goal":
        return 1.0, 0.0
    return float(p[pos[0]]), float(h[pos[0]] / p[pos[0]])


def test_random_solved_start_is_free():
    spec = TowerSpec(1)
    inst = enumerate_category(spec)[0]
    state = assembled_state(inst, spec.workspace, None)
    rep = random_explore(state, spec, SearchBudget(max_env_steps=10), seed=0)
    assert rep.success and rep.env_steps == 0


def test_random_budget_zero():
    spec, state = tower1_scene([(1.0, GREEN)])
    rep = random_explore(state, spec, SearchBudget(max_env_steps=0), seed=0)
    assert not rep.success and rep.env_steps == 0


def test_random_single_action_always_one_step():
    spec, state = tower1_scene([(1.0, GREEN)])
    assert len(enumerate_actions(state)) == 1
    for seed in range(10):
        rep = random_explore(state, spec, SearchBudget(max_env_steps=50), seed=seed)
        assert rep.success and rep.env_steps == 1


def test_random_walk_matches_absorption_oracle():
    spec, state = tower1_scene([(1.0, GREEN), (1.0, YELLOW)])
    p, cond_steps = absorption_oracle(state, spec)
    assert 0.0 < p < 1.0
    runs = [
        random_explore(state, spec, SearchBudget(max_env_steps=500), seed=s)
        for s in range(400)
    ]
    wins = [r.env_steps for r in runs if r.success]
    assert len(wins) / len(runs) == pytest.approx(p, abs=0.08)
    assert float(np.mean(wins)) == pytest.approx(cond_steps, rel=0.15)


def test_mcts_terminal_root_needs_no_steps():
    spec = TowerSpec(1)
    inst = enumerate_category(spec)[0]
    state = assembled_state(inst, spec.workspace, None)
    rep = mcts_search(state, spec, SearchBudget(max_env_steps=100), seed=0)
    assert rep.success and rep.env_steps == 0


def test_mcts_single_action_degenerate_uct():
    spec, state = tower1_scene([(1.0, GREEN)])
    budget = SearchBudget(
        max_env_steps=100, mcts=MctsConfig(simulations_per_move=5, uct_c=0.0)
    )
    rep = mcts_search(state, spec, budget, seed=3)
    assert rep.success
    assert 1 <= rep.env_steps <= 100


def test_mcts_visit_counts_sum_to_parent_minus_one():
    spec = ArchSpec(3)
    inst = enumerate_category(spec)[0]
    rng = np.random.default_rng(11)
    pieces = materialize_pieces(inst, rng)
    state = scatter_pieces(pieces, spec.workspace, rng)
    root = _Node(state, None)
    cfg = MctsConfig(simulations_per_move=150, uct_c=1.4, rollout_depth=4)
    _run_simulations(root, spec, cfg, np.random.default_rng(0), _Stepper(10_000))

    def check(node):
        if node.children:
            assert sum(c.visits for _, c in node.children) == node.visits - 1
            for _, child in node.children:
                check(child)

    assert root.visits == 151
    check(root)


def test_mcts_beats_random_on_minimal_arch_sets():
    spec = ArchSpec(3)
    inst = enumerate_category(spec)[0]
    budget = SearchBudget(max_env_steps=3000)
    mcts_steps, random_steps = [], []
    for seed in range(6):
        rng = np.random.default_rng(seed)
        pieces = materialize_pieces(inst, rng)
        state = scatter_pieces(pieces, spec.workspace, rng)
        mcts_steps.append(mcts_search(state, spec, budget, seed).env_steps)
        random_steps.append(random_explore(state, spec, budget, seed).env_steps)
    assert np.mean(mcts_steps) < np.mean(random_steps)


def test_env_steps_match_instrumented_simulator(monkeypatch):
    import blockassembly.search as search_mod

    calls = {"n": 0}
    real = apply_action

    def counting(state, action):
        calls["n"] += 1
        return real(state, action)

    monkeypatch.setattr(search_mod, "apply_action", counting)
    spec = ArchSpec(3)
    inst = enumerate_category(spec)[0]
    rng = np.random.default_rng(2)
    pieces = materialize_pieces(inst, rng)
    state = scatter_pieces(pieces, spec.workspace, rng)

    rep = mcts_search(state, spec, SearchBudget(max_env_steps=600), seed=2)
    assert rep.env_steps == calls["n"]
    calls["n"] = 0
    rep = random_explore(state, spec, SearchBudget(max_env_steps=200), seed=2)
    assert rep.env_steps == calls["n"]


def test_oracle_steps_minimal_set():
    assert oracle_steps(ArchSpec(3), [(2.0, GREEN), (2.0, YELLOW), (3.0, GREEN)]) == 3


def test_oracle_steps_unbuildable_raises():
    with pytest.raises(ValueError):
        oracle_steps(ArchSpec(3), [(1.0, GREEN)])


def test_steps_table_shape_and_determinism(tmp_path):
    budget = SearchBudget(
        max_env_steps=200, mcts=MctsConfig(simulations_per_move=10, rollout_depth=3)
    )

    def oracle_net(state):
        return completion_score(state, ArchSpec(3), feasible_only=True)

    report = steps_table(
        (3,),
        ("random", "mcts", "ours", "oracle"),
        episodes=3,
        seed=5,
        nets={3: oracle_net},
        budget=budget,
    )
    assert [c["method"] for c in report["cells"]] == [
        "random",
        "mcts",
        "ours",
        "oracle",
    ]
    oracle_cell = report["cells"][-1]
    assert oracle_cell["success_rate"] == 1.0
    assert oracle_cell["mean_steps"] >= 3.0
    ours_cell = report["cells"][2]
    assert ours_cell["success_rate"] == 1.0

    again = steps_table(
        (3,),
        ("random", "mcts", "ours", "oracle"),
        episodes=3,
        seed=5,
        nets={3: oracle_net},
        budget=budget,
    )
    assert again["cells"] == report["cells"]

    csv_path = tmp_path / "table.csv"
    json_path = tmp_path / "table.json"
    write_table_csv(report, str(csv_path))
    write_table_json(report, str(json_path))
    text = csv_path.read_text()
    assert text.startswith("height,method,")
    assert len(text.strip().splitlines()) == 5
    loaded = json.loads(json_path.read_text())
    assert loaded["cells"] == report["cells"]


def test_steps_table_rejects_unknown_method():
    with pytest.raises(ValueError):
        steps_table((3,), ("annealing",), episodes=1, seed=0)


def test_steps_table_requires_nets_for_ours():
    with pytest.raises(ValueError):
        steps_table((3,), ("ours",), episodes=1, seed=0)
