"""Disassembly of built shapes into supervision for reassembly.

Starting from an assembled instance, repeatedly move a non-blocked structure
primitive to a free table cell. Merging the reachable states by canonical key
gives a layered graph; the inverse of each removal is an assembly action, so
walking a disassembly path backwards is a demonstration of how to build the
shape. Action sets from all instances of a category are pooled per canonical
key, which is what makes states with several valid continuations (either
anchor next, either of two interchangeable pieces) carry all of them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .scenes import assembled_state
from .shapes import ArchSpec, TowerSpec, classify, enumerate_category
from .world import (
    AssemblyAction,
    WorldError,
    WorldState,
    action_to_dict,
    apply_action,
    canonical_key,
    color_index,
    free_loose_cells,
    invert_action,
    lying_pose,
    state_to_dict,
)

GAMMA = 0.95
NODE_BUDGET = 10_000


class NotAnInstance(WorldError):
    """Raised when asked to disassemble a state the category classifier rejects."""


@dataclass(frozen=True)
class Rebuild:
    """One assembly action out of a node, together with where it leads."""

    action: AssemblyAction
    parent_key: str


@dataclass(frozen=True)
class GraphNode:
    state: WorldState
    depth: int
    value_bound: float
    rebuilds: tuple[Rebuild, ...]
    child_keys: tuple[str, ...]
    terminal: bool

    def actions(self) -> tuple[AssemblyAction, ...]:
        return tuple(r.action for r in self.rebuilds)


class DisassemblyGraph:
    """Layered graph of canonical keys from one assembled instance."""

    def __init__(
        self,
        root_key: str,
        nodes: dict[str, GraphNode],
        gamma: float,
        complete: bool,
    ) -> None:
        self.root_key = root_key
        self.nodes = nodes
        self.gamma = gamma
        self.complete = complete

    def __len__(self) -> int:
        return len(self.nodes)

    def depth_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for node in self.nodes.values():
            out[node.depth] = out.get(node.depth, 0) + 1
        return out

    def max_depth(self) -> int:
        return max(node.depth for node in self.nodes.values())

    def terminal_keys(self) -> list[str]:
        return [key for key, node in self.nodes.items() if node.terminal]


def removable_ids(state: WorldState) -> tuple[int, ...]:
    """Structure primitives with nothing above them, in id order."""
    structure = set(state.structure_ids())
    return tuple(
        p.id for p in state.primitives if p.id in structure and p.id not in state.blocked
    )


def removal_action(
    state: WorldState, pid: int, rng: np.random.Generator
) -> AssemblyAction | None:
    """Move primitive ``pid`` flat onto a random free cell, if any is left."""
    piece = state.get(pid)
    cells = free_loose_cells(state, piece.length)
    if not cells:
        return None
    cell = cells[int(rng.integers(len(cells)))]
    return AssemblyAction(pid, lying_pose(cell, piece.length), "along_x")


def build_graph(
    state: WorldState,
    spec: ArchSpec | TowerSpec,
    rng: np.random.Generator,
    gamma: float = GAMMA,
    node_budget: int = NODE_BUDGET,
) -> DisassemblyGraph:
    if not classify(state, spec):
        raise NotAnInstance("the root state does not satisfy the category classifier")
    root_key = canonical_key(state).text
    work: dict[str, dict] = {
        root_key: {"state": state, "depth": 0, "rebuilds": {}, "children": []}
    }
    queue = deque([root_key])
    complete = True
    while queue:
        key = queue.popleft()
        rec = work[key]
        current: WorldState = rec["state"]
        if not current.structure_ids():
            continue
        for pid in removable_ids(current):
            action = removal_action(current, pid, rng)
            if action is None:
                continue
            inverse = invert_action(current, action)
            succ = apply_action(current, action)
            skey = canonical_key(succ).text
            child = work.get(skey)
            if child is None:
                if len(work) >= node_budget:
                    complete = False
                    continue
                child = {
                    "state": succ,
                    "depth": rec["depth"] + 1,
                    "rebuilds": {},
                    "children": [],
                }
                work[skey] = child
                queue.append(skey)
            child["rebuilds"].setdefault(inverse.signature(), Rebuild(inverse, key))
            if skey not in rec["children"]:
                rec["children"].append(skey)
    nodes = {}
    for key, rec in work.items():
        nodes[key] = GraphNode(
            state=rec["state"],
            depth=rec["depth"],
            value_bound=gamma ** rec["depth"],
            rebuilds=tuple(rec["rebuilds"][sig] for sig in sorted(rec["rebuilds"])),
            child_keys=tuple(rec["children"]),
            terminal=not rec["state"].structure_ids(),
        )
    return DisassemblyGraph(root_key, nodes, gamma, complete)


@dataclass(frozen=True)
class TrajectoryStep:
    """State after one removal plus the action that undoes the removal."""

    state: WorldState
    rebuild: AssemblyAction
    depth: int


def sample_trajectory(
    state: WorldState,
    spec: ArchSpec | TowerSpec,
    rng: np.random.Generator,
) -> list[TrajectoryStep]:
    """One concrete disassembly path with fresh random destinations.

    Returned in disassembly order; applying the rebuild actions in reverse
    order reassembles the exact starting poses.
    """
    if not classify(state, spec):
        raise NotAnInstance("the root state does not satisfy the category classifier")
    steps = []
    current = state
    depth = 0
    while current.structure_ids():
        ids = removable_ids(current)
        if not ids:
            break
        pid = int(ids[int(rng.integers(len(ids)))])
        action = removal_action(current, pid, rng)
        if action is None:
            break
        inverse = invert_action(current, action)
        current = apply_action(current, action)
        depth += 1
        steps.append(TrajectoryStep(current, inverse, depth))
    return steps


def recolored_state(
    state: WorldState, color_by_id: dict[int, tuple[float, float, float]]
) -> WorldState:
    """The same geometry with primitive colors swapped by id."""
    prims = tuple(
        replace(p, color=color_by_id.get(p.id, p.color)) for p in state.primitives
    )
    return WorldState(prims, state.workspace, validate=False)


def action_class_signature(state: WorldState, action: AssemblyAction) -> tuple:
    """Identity-free form of an assembly action: what kind of piece goes where."""
    piece = state.get(action.pick_id)
    x, y, z = action.place_position
    return (
        (piece.length, color_index(piece.color)),
        (round(x, 3), round(y, 3), round(z, 3)),
        action.orientation,
    )


def matching_actions(state: WorldState, signature: tuple) -> list[AssemblyAction]:
    """All concrete valid actions in ``state`` realizing an id-free signature."""
    (length, cidx), pos, orientation = signature
    out = []
    for p in state.primitives:
        if p.length != length or color_index(p.color) != cidx:
            continue
        if p.id in state.blocked:
            continue
        action = AssemblyAction(p.id, pos, orientation)
        try:
            apply_action(state, action)
        except WorldError:
            continue
        out.append(action)
    return out


def build_class_actions(
    graphs: list[DisassemblyGraph],
) -> dict[str, tuple[tuple, ...]]:
    """Union of rebuild-action signatures per canonical key across graphs."""
    pooled: dict[str, set] = {}
    for graph in graphs:
        for key, node in graph.nodes.items():
            sigs = pooled.setdefault(key, set())
            for rebuild in node.rebuilds:
                sigs.add(action_class_signature(node.state, rebuild.action))
    return {key: tuple(sorted(sigs)) for key, sigs in pooled.items()}


def category_graphs(
    spec: ArchSpec | TowerSpec,
    rng: np.random.Generator,
    gamma: float = GAMMA,
    node_budget: int = NODE_BUDGET,
) -> list[DisassemblyGraph]:
    graphs = []
    for instance in enumerate_category(spec):
        root = assembled_state(instance, spec.workspace, rng)
        graphs.append(build_graph(root, spec, rng, gamma=gamma, node_budget=node_budget))
    return graphs


def build_demos(
    spec: ArchSpec | TowerSpec,
    rng: np.random.Generator,
    paths_per_instance: int = 8,
    gamma: float = GAMMA,
    node_budget: int = NODE_BUDGET,
) -> tuple[list[dict], dict]:
    """Demonstration pairs for the whole category.

    Every trajectory state (except the assembled root) becomes one entry whose
    action set is the pooled class set at its canonical key, remapped onto the
    concrete loose primitives of that state. Values follow gamma ** depth.
    """
    graphs = category_graphs(spec, rng, gamma=gamma, node_budget=node_budget)
    class_actions = build_class_actions(graphs)
    instances = enumerate_category(spec)
    entries = []
    n_pairs = 0
    for instance, graph in zip(instances, graphs):
        for _ in range(paths_per_instance):
            root = graph.nodes[graph.root_key].state
            steps = sample_trajectory(root, spec, rng)
            for step in steps:
                key = canonical_key(step.state).text
                sigs = class_actions.get(key, ())
                actions = []
                seen = set()
                for sig in sigs:
                    for act in matching_actions(step.state, sig):
                        if act.signature() not in seen:
                            seen.add(act.signature())
                            actions.append(act)
                if not actions:
                    actions = [step.rebuild]
                entries.append(
                    {
                        "state": state_to_dict(step.state),
                        "actions": [action_to_dict(a) for a in actions],
                        "value": gamma**step.depth,
                        "depth": step.depth,
                        "instance": instance.label,
                        "key": key,
                    }
                )
                n_pairs += 1
    stats = {
        "instances": len(instances),
        "graph_nodes": sum(len(g) for g in graphs),
        "pairs": n_pairs,
        "keys_with_actions": len(class_actions),
        "complete": all(g.complete for g in graphs),
    }
    return entries, stats
