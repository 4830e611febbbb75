"""Value targets from disassembly, net training, and the greedy builder.

States along a disassembly trajectory get value gamma^(pieces removed); the
assembled state gets exactly 1. Extra states reached by one random action are
labeled gamma times their parent unless their canonical key already appears
in the category's disassembly graphs, in which case the known value is
reused. The greedy policy evaluates the net on every legal successor and
picks the argmax.
"""

from __future__ import annotations

import numpy as np

from .encoding import ENCODING_DIM, encode_batch, encode_state
from .mlp import ValueMLP
from .scenes import (
    assembled_state,
    materialize_pieces,
    sample_primitive_set,
    scatter_pieces,
)
from .shapes import ArchSpec, CategoryInstance, TowerSpec, classify, identify_instance
from .unmake import (
    GAMMA,
    NODE_BUDGET,
    build_graph,
    recolored_state,
    removable_ids,
    removal_action,
    sample_trajectory,
)
from .world import (
    MAX_PRIMITIVES,
    PRIMITIVE_COLORS,
    AssemblyAction,
    Primitive,
    WorldError,
    WorldState,
    apply_action,
    canonical_key,
    enumerate_actions,
    free_loose_cells,
    lying_pose,
    sample_action,
)


class Divergence(RuntimeError):
    """Training loss became NaN; carries the epoch where it happened."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch}")
        self.epoch = epoch


class NoActionsAvailable(WorldError):
    pass


class ValueDataset:
    """Encoded states with value targets, deduplicated keeping the max target."""

    def __init__(
        self,
        x: np.ndarray,
        y: np.ndarray,
        provenance: tuple[str, ...],
        depth: np.ndarray,
        parent_value: np.ndarray,
        meta: dict,
    ) -> None:
        self.x = x
        self.y = y
        self.provenance = provenance
        self.depth = depth
        self.parent_value = parent_value
        self.meta = meta

    def __len__(self) -> int:
        return self.x.shape[0]


def _expansion_action(
    state: WorldState, rng: np.random.Generator, policy_frac: float
) -> AssemblyAction | None:
    if rng.random() < policy_frac:
        action = sample_action(state, rng)
        if action is not None:
            return action
    ids = removable_ids(state)
    if not ids:
        return None
    pid = int(ids[int(rng.integers(len(ids)))])
    return removal_action(state, pid, rng)


def _with_spares(
    state: WorldState, rng: np.random.Generator, max_spares: int
) -> WorldState:
    """Scatter a few extra loose pieces onto the state (ids above existing)."""
    room = min(max_spares, MAX_PRIMITIVES - len(state))
    if room <= 0:
        return state
    n = int(rng.integers(0, room + 1))
    next_id = max((p.id for p in state.primitives), default=-1) + 1
    for k in range(n):
        length = float(rng.choice((1.0, 2.0, 3.0), p=(0.5, 0.25, 0.25)))
        cells = free_loose_cells(state, length)
        if not cells:
            break
        cell = cells[int(rng.integers(len(cells)))]
        color = PRIMITIVE_COLORS[int(rng.integers(len(PRIMITIVE_COLORS)))]
        piece = Primitive(
            next_id + k, (length, 1.0, 1.0), color, lying_pose(cell, length)
        )
        state = WorldState(state.primitives + (piece,), state.workspace, validate=False)
    return state


def build_value_dataset(
    instances: list[CategoryInstance],
    spec: ArchSpec | TowerSpec,
    rng: np.random.Generator,
    min_pairs: int = 20_000,
    expansions_per_state: int = 2,
    policy_frac: float = 0.5,
    max_spares: int = 3,
    gamma: float = GAMMA,
    node_budget: int = NODE_BUDGET,
    dedupe: bool = True,
) -> ValueDataset:
    """Generate at least ``min_pairs`` labeled states, then deduplicate.

    ``dedupe=False`` keeps every generated row, which lets callers audit raw
    labels against the trajectory and expansion labeling rules.

    Primitive colors are redrawn for every trajectory (instance color
    constraints kept), so the net sees each shape in many palettes, and a
    random handful of spare loose pieces is added so that scenes with more
    primitives than the instance needs stay on-distribution. The
    canonical-key table used for label reuse is adjusted the same way.
    """
    if not instances:
        raise WorldError("no instances to build a value dataset from")
    ref_graphs = []
    for inst in instances:
        ref_root = assembled_state(inst, spec.workspace, None)
        ref_graphs.append(
            build_graph(ref_root, spec, rng, gamma=gamma, node_budget=node_budget)
        )
    key_depth: dict[str, int] = {}
    rows_x: list[np.ndarray] = []
    rows_y: list[float] = []
    rows_prov: list[str] = []
    rows_depth: list[int] = []
    rows_parent: list[float] = []

    def emit(state, value, prov, depth, parent):
        rows_x.append(encode_state(state))
        rows_y.append(value)
        rows_prov.append(prov)
        rows_depth.append(depth)
        rows_parent.append(parent)

    def expand(state, parent_value, count=None, chain=1):
        pf = policy_frac if removable_ids(state) else 1.0
        for _ in range(count if count is not None else expansions_per_state):
            action = _expansion_action(state, rng, pf)
            if action is None:
                continue
            try:
                succ = apply_action(state, action)
            except WorldError:
                continue
            key = canonical_key(succ).text
            matched = key_depth.get(key)
            if matched is not None:
                emit(succ, gamma**matched, "expansion_matched", matched, parent_value)
            else:
                value = gamma * parent_value
                emit(succ, value, "expansion_step", -1, parent_value)
                if chain > 0:
                    # Branch once more off the detour so the net sees that
                    # undoing it (a key match) beats digging deeper.
                    expand(succ, value, count=2, chain=chain - 1)

    generated = 0
    while generated < min_pairs:
        for inst, graph in zip(instances, ref_graphs):
            colors = materialize_pieces(inst, rng)
            cmap = {i: color for i, (_, color) in enumerate(colors)}
            root = recolored_state(graph.nodes[graph.root_key].state, cmap)
            root = _with_spares(root, rng, max_spares)
            spares = tuple(p for p in root.primitives if p.id not in cmap)
            for node in graph.nodes.values():
                rnode = recolored_state(node.state, cmap)
                if spares:
                    rnode = WorldState(
                        rnode.primitives + spares, rnode.workspace, validate=False
                    )
                key_depth.setdefault(canonical_key(rnode).text, node.depth)
            emit(root, 1.0, "trajectory", 0, float("nan"))
            expand(root, 1.0)
            steps = sample_trajectory(root, spec, rng)
            for step in steps:
                value = gamma**step.depth
                emit(step.state, value, "trajectory", step.depth, float("nan"))
                if step.state.structure_ids():
                    expand(step.state, value)
                else:
                    # The all-loose start of assembly gets extra branching so
                    # first-move decisions are on-distribution for the net.
                    expand(step.state, value, count=2 * expansions_per_state)
            generated = len(rows_y)
            if generated >= min_pairs:
                break

    if dedupe:
        best: dict[bytes, int] = {}
        for i, vec in enumerate(rows_x):
            key = vec.tobytes()
            j = best.get(key)
            if j is None or rows_y[i] > rows_y[j]:
                best[key] = i
        keep = sorted(best.values())
    else:
        keep = list(range(len(rows_y)))
    x = np.stack([rows_x[i] for i in keep])
    y = np.array([rows_y[i] for i in keep])
    meta = {
        "generated": generated,
        "kept": len(keep),
        "gamma": gamma,
        "instances": len(instances),
        "by_provenance": {
            name: rows_prov.count(name)
            for name in ("trajectory", "expansion_matched", "expansion_step")
        },
    }
    return ValueDataset(
        x,
        y,
        tuple(rows_prov[i] for i in keep),
        np.array([rows_depth[i] for i in keep]),
        np.array([rows_parent[i] for i in keep]),
        meta,
    )


def train_value(
    dataset: ValueDataset,
    epochs: int = 30,
    lr: float = 1e-3,
    batch: int = 256,
    seed: int = 0,
    net: ValueMLP | None = None,
    hidden: int = 128,
    depth: int = 4,
) -> tuple[ValueMLP, list[float]]:
    """Minimize MSE with Adam; deterministic shuffles; raises Divergence on NaN."""
    if len(dataset) == 0:
        raise WorldError("empty value dataset")
    if net is None:
        net = ValueMLP(ENCODING_DIM, hidden=hidden, depth=depth, seed=seed)
    rng = np.random.default_rng(seed)
    history = []
    n = len(dataset)
    for epoch in range(epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            if idx.size < 2:
                continue
            loss = net.train_step(dataset.x[idx], dataset.y[idx], lr=lr)
            if not np.isfinite(loss):
                raise Divergence(epoch)
            losses.append(loss)
        history.append(float(np.mean(losses)))
    return net, history


def _successor_values(net, states: list[WorldState]) -> np.ndarray:
    if hasattr(net, "predict"):
        return np.asarray(net.predict(encode_batch(states)), dtype=np.float64)
    return np.array([float(net(s)) for s in states])


def greedy_policy_step(net, state: WorldState) -> AssemblyAction:
    """Argmax over the net's value of every legal successor.

    ``net`` is either a trained value net or any callable WorldState -> float.
    Ties resolve to the earliest action in enumeration order.
    """
    actions = enumerate_actions(state)
    if not actions:
        raise NoActionsAvailable("no legal assembly action from this state")
    succs = [apply_action(state, a) for a in actions]
    values = _successor_values(net, succs)
    return actions[int(np.argmax(values))]


def greedy_rollout(
    net,
    state: WorldState,
    spec: ArchSpec | TowerSpec,
    max_steps: int = 2 * MAX_PRIMITIVES,
) -> tuple[WorldState, int, bool]:
    """Roll the greedy policy until the classifier fires or steps run out.

    Successors whose canonical key was already visited are skipped in value
    order, so an imperfect net cannot trap the rollout in a two-state cycle;
    with no unvisited successor the plain argmax is taken.
    """
    steps = 0
    if classify(state, spec):
        return state, 0, True
    seen = {canonical_key(state).text}
    while steps < max_steps:
        actions = enumerate_actions(state)
        if not actions:
            break
        succs = [apply_action(state, a) for a in actions]
        values = _successor_values(net, succs)
        order = np.argsort(-values, kind="stable")
        pick = int(order[0])
        for idx in order:
            key = canonical_key(succs[int(idx)]).text
            if key not in seen:
                pick = int(idx)
                seen.add(key)
                break
        state = succs[pick]
        steps += 1
        if classify(state, spec):
            return state, steps, True
    return state, steps, False


def discover_instances(
    net,
    spec: ArchSpec | TowerSpec,
    attempts: int,
    max_steps: int = 2 * MAX_PRIMITIVES,
    seed: int = 0,
) -> list[CategoryInstance]:
    """Greedy rollouts from random scattered sets; returns the instances built."""
    rng = np.random.default_rng(seed)
    found: dict[str, CategoryInstance] = {}
    for _ in range(attempts):
        pieces = sample_primitive_set(rng)
        state = scatter_pieces(pieces, spec.workspace, rng)
        final, _, ok = greedy_rollout(net, state, spec, max_steps)
        if ok:
            inst = identify_instance(final, spec)
            if inst is not None:
                found.setdefault(inst.label, inst)
    return [found[label] for label in sorted(found)]


def train_category_value(
    instances: list[CategoryInstance],
    spec: ArchSpec | TowerSpec,
    rounds: int = 5,
    seed: int = 0,
    min_pairs: int = 20_000,
    epochs: int = 30,
    lr: float = 1e-3,
    lr_final: float | None = None,
    batch: int = 256,
    hidden: int = 128,
    expansions_per_state: int = 2,
    policy_frac: float = 0.5,
    gamma: float = GAMMA,
    max_retries: int = 3,
) -> tuple[ValueMLP, list[dict]]:
    """Train one net over a fixed instance list, rebuilding the dataset each
    round with fresh colors, table layouts and spares.

    This is the trainer used when the instance list is already known (the
    category is enumerable), so no discovery rollouts are interleaved. When
    ``lr_final`` is set the learning rate decays geometrically from ``lr`` to
    ``lr_final`` over the rounds.
    """
    net: ValueMLP | None = None
    metrics = []
    for rnd in range(rounds):
        if lr_final is not None and rounds > 1:
            round_lr = lr * (lr_final / lr) ** (rnd / (rounds - 1))
        else:
            round_lr = lr
        rng = np.random.default_rng(seed + 1000 * rnd)
        dataset = build_value_dataset(
            instances,
            spec,
            rng,
            min_pairs=min_pairs,
            expansions_per_state=expansions_per_state,
            policy_frac=policy_frac,
            gamma=gamma,
        )
        for retry in range(max_retries + 1):
            try:
                net, history = train_value(
                    dataset,
                    epochs=epochs,
                    lr=round_lr,
                    batch=batch,
                    seed=seed + rnd + 10_000 * retry,
                    net=net,
                    hidden=hidden,
                )
                break
            except Divergence:
                net = None
                if retry == max_retries:
                    raise
        metrics.append(
            {
                "round": rnd,
                "dataset_generated": dataset.meta["generated"],
                "dataset_kept": dataset.meta["kept"],
                "final_loss": history[-1],
            }
        )
    assert net is not None
    return net, metrics


def merge_datasets(datasets: list[ValueDataset]) -> ValueDataset:
    """Concatenate datasets and re-deduplicate, keeping max targets."""
    if not datasets:
        raise WorldError("nothing to merge")
    x = np.concatenate([d.x for d in datasets])
    y = np.concatenate([d.y for d in datasets])
    prov = tuple(p for d in datasets for p in d.provenance)
    depth = np.concatenate([d.depth for d in datasets])
    parent = np.concatenate([d.parent_value for d in datasets])
    best: dict[bytes, int] = {}
    for i in range(x.shape[0]):
        key = x[i].tobytes()
        j = best.get(key)
        if j is None or y[i] > y[j]:
            best[key] = i
    keep = sorted(best.values())
    meta = {
        "generated": sum(d.meta["generated"] for d in datasets),
        "kept": len(keep),
        "gamma": datasets[0].meta["gamma"],
        "instances": sum(d.meta["instances"] for d in datasets),
        "merged_from": len(datasets),
    }
    return ValueDataset(
        x[keep],
        y[keep],
        tuple(prov[i] for i in keep),
        depth[keep],
        parent[keep],
        meta,
    )


def train_multiheight_value(
    spec_instances: list[tuple[ArchSpec | TowerSpec, list[CategoryInstance]]],
    rounds: int = 5,
    seed: int = 0,
    min_pairs: int = 20_000,
    epochs: int = 30,
    lr: float = 1e-3,
    lr_final: float | None = None,
    batch: int = 256,
    hidden: int = 128,
    expansions_per_state: int = 2,
    policy_frac: float = 0.5,
    gamma: float = GAMMA,
    max_retries: int = 3,
) -> tuple[ValueMLP, list[dict]]:
    """One net over several categories; per round each category contributes an

    equal share of a fresh ``min_pairs``-sized dataset and the merged result
    is trained on with the same warm-start and retry scheme as the
    single-category trainer.
    """
    if not spec_instances:
        raise WorldError("no categories to train on")
    share = max(1, min_pairs // len(spec_instances))
    net: ValueMLP | None = None
    metrics = []
    for rnd in range(rounds):
        if lr_final is not None and rounds > 1:
            round_lr = lr * (lr_final / lr) ** (rnd / (rounds - 1))
        else:
            round_lr = lr
        parts = []
        for part_idx, (spec, instances) in enumerate(spec_instances):
            rng = np.random.default_rng(seed + 1000 * rnd + 101 * part_idx)
            parts.append(
                build_value_dataset(
                    instances,
                    spec,
                    rng,
                    min_pairs=share,
                    expansions_per_state=expansions_per_state,
                    policy_frac=policy_frac,
                    gamma=gamma,
                )
            )
        dataset = merge_datasets(parts)
        for retry in range(max_retries + 1):
            try:
                net, history = train_value(
                    dataset,
                    epochs=epochs,
                    lr=round_lr,
                    batch=batch,
                    seed=seed + rnd + 10_000 * retry,
                    net=net,
                    hidden=hidden,
                )
                break
            except Divergence:
                net = None
                if retry == max_retries:
                    raise
        metrics.append(
            {
                "round": rnd,
                "dataset_generated": dataset.meta["generated"],
                "dataset_kept": dataset.meta["kept"],
                "final_loss": history[-1],
            }
        )
    assert net is not None
    return net, metrics


def run_training_loop(
    input_instance: CategoryInstance,
    spec: ArchSpec | TowerSpec,
    rounds: int = 5,
    seed: int = 0,
    min_pairs: int = 20_000,
    epochs: int = 30,
    lr: float = 1e-3,
    batch: int = 256,
    hidden: int = 128,
    attempts_per_round: int = 40,
    expansions_per_state: int = 2,
    policy_frac: float = 0.5,
    gamma: float = GAMMA,
    max_retries: int = 3,
) -> tuple[ValueMLP, list[CategoryInstance], list[dict]]:
    """Alternate dataset building, training and instance discovery.

    The discovered instance set only ever grows; each round rebuilds the value
    dataset from everything found so far. A diverged round is retried with a
    fresh seed up to ``max_retries`` times.
    """
    instances: dict[str, CategoryInstance] = {input_instance.label: input_instance}
    net: ValueMLP | None = None
    metrics = []
    for rnd in range(rounds):
        rng = np.random.default_rng(seed + 1000 * rnd)
        dataset = build_value_dataset(
            list(instances.values()),
            spec,
            rng,
            min_pairs=min_pairs,
            expansions_per_state=expansions_per_state,
            policy_frac=policy_frac,
            gamma=gamma,
        )
        history = None
        for retry in range(max_retries + 1):
            try:
                net, history = train_value(
                    dataset,
                    epochs=epochs,
                    lr=lr,
                    batch=batch,
                    seed=seed + rnd + 10_000 * retry,
                    net=net,
                    hidden=hidden,
                )
                break
            except Divergence:
                net = None
                if retry == max_retries:
                    raise
        discovered = discover_instances(
            net, spec, attempts_per_round, seed=seed + 500 + rnd
        )
        for inst in discovered:
            instances.setdefault(inst.label, inst)
        metrics.append(
            {
                "round": rnd,
                "dataset_generated": dataset.meta["generated"],
                "dataset_kept": dataset.meta["kept"],
                "final_loss": history[-1],
                "instances_known": len(instances),
            }
        )
    return net, [instances[k] for k in sorted(instances)], metrics
