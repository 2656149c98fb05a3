"""AND-OR search tree: node types, status semantics, and status propagation.

Molecule nodes are OR nodes (one successful child suffices), reaction nodes
are AND nodes (every child must succeed).  The same item appearing under
different branches yields distinct molecule nodes: values and visit counts
are tree-local, so sharing would change the selection semantics.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import AlreadyExpanded, InconsistentTree
from .items import Item, Stock, TemplateAction


class Status(enum.Enum):
    UNKNOWN = "unknown"
    SUCCESS = "success"
    FAILURE = "failure"

    @property
    def terminal(self) -> bool:
        return self is not Status.UNKNOWN


@dataclass(eq=False)
class MoleculeNode:
    """OR node carrying an item and its value v_m (max child q_bar once expanded)."""

    item: Item
    v_m: float
    status: Status = Status.UNKNOWN
    expanded: bool = False
    children: list["ReactionNode"] = field(default_factory=list)
    parent: Optional["ReactionNode"] = None

    def ancestor_item_ids(self) -> set[str]:
        """Ids of molecule nodes on the path to the root, this node included."""
        ids = set()
        node = self
        while node is not None:
            ids.add(node.item.id)
            node = node.parent.parent if node.parent is not None else None
        return ids


@dataclass(eq=False)
class ReactionNode:
    """AND node carrying a decomposition action and its running mean score q_bar.

    n counts reward-driven updates only; the initial network score sits in
    q_history_sum but not in n, so q_bar == q_history_sum / (n + 1) exactly.
    """

    action: TemplateAction
    parent: MoleculeNode
    q_bar: float
    n: int = 0
    q_history_sum: float = 0.0
    status: Status = Status.UNKNOWN
    children: list[MoleculeNode] = field(default_factory=list)

    def record_reward(self, q: float) -> None:
        self.n += 1
        self.q_history_sum += q
        self.q_bar = self.q_history_sum / (self.n + 1)


class SearchTree:
    """One search's AND-OR tree plus its node/iteration counters."""

    def __init__(self, target: Item, stock: Stock):
        self.stock = stock
        self.root = self._make_molecule(target, parent=None)
        self.molecule_nodes = 1
        self.reaction_nodes = 0
        self.iterations = 0

    def _make_molecule(self, item: Item, parent: Optional[ReactionNode]) -> MoleculeNode:
        if item in self.stock:
            # Stock members are successful by definition and never expanded.
            return MoleculeNode(item=item, v_m=1.0, status=Status.SUCCESS,
                                expanded=True, parent=parent)
        return MoleculeNode(item=item, v_m=0.5, parent=parent)

    def attach_expansion(self, leaf: MoleculeNode,
                         actions: Sequence[TemplateAction],
                         q0s: Sequence[float]) -> None:
        """Adds one reaction child per action, each with q_bar = q0 and n = 0.

        Reactants become child molecule nodes (stock members pre-marked
        successful).  An empty action list marks the leaf as a dead end.
        """
        if leaf.expanded:
            raise AlreadyExpanded(f"molecule node {leaf.item.id!r} is already expanded")
        if len(actions) != len(q0s):
            raise ValueError(f"{len(actions)} actions but {len(q0s)} initial scores")
        leaf.expanded = True
        if not actions:
            leaf.status = Status.FAILURE
            return
        for action, q0 in zip(actions, q0s):
            node = ReactionNode(action=action, parent=leaf, q_bar=q0, q_history_sum=q0)
            for reactant in action.reactants:
                child = self._make_molecule(reactant, parent=node)
                node.children.append(child)
                self.molecule_nodes += 1
            # A reaction whose reactants are all stock is successful on arrival.
            node.status = evaluate_status(node, self.stock)
            leaf.children.append(node)
            self.reaction_nodes += 1

    def route_exists(self) -> bool:
        return self.root.status is Status.SUCCESS


def evaluate_status(node, stock: Stock) -> Status:
    """The AND/OR rule value of a node given its children's current statuses."""
    if isinstance(node, MoleculeNode):
        if node.item in stock:
            return Status.SUCCESS
        if any(c.status is Status.SUCCESS for c in node.children):
            return Status.SUCCESS
        if node.expanded and (not node.children
                              or all(c.status is Status.FAILURE for c in node.children)):
            return Status.FAILURE
        return Status.UNKNOWN
    # Reaction node: all children must succeed; one failure fails it.
    if any(c.status is Status.FAILURE for c in node.children):
        return Status.FAILURE
    if all(c.status is Status.SUCCESS for c in node.children):
        return Status.SUCCESS
    return Status.UNKNOWN


def propagate_status(tree: SearchTree, node) -> set:
    """Re-evaluates statuses from node upward; returns the nodes that changed.

    Statuses are monotone: once terminal they never change.  Terminal nodes on
    the walk are skipped over (their newly-set status may still need pushing
    into the parent); the walk stops at the first undecided node whose status
    is unaffected.  Re-running is a no-op.
    """
    changed = set()
    current = node
    while current is not None:
        if current.status.terminal:
            # Terminal statuses are frozen; verify the rules still agree,
            # then keep walking in case the parent has not absorbed them yet.
            new = evaluate_status(current, tree.stock)
            if new is not current.status and new.terminal:
                raise InconsistentTree(
                    f"terminal status would flip from {current.status} to {new}"
                )
            current = current.parent
            continue
        new = evaluate_status(current, tree.stock)
        if new is current.status:
            break
        current.status = new
        changed.add(current)
        current = current.parent
    return changed


def snapshot(tree: SearchTree) -> dict:
    """JSON-friendly dump of the full tree (debugging, experience tooling)."""
    nodes = []
    edges = []

    def visit(node, parent_idx: Optional[int]) -> None:
        idx = len(nodes)
        if isinstance(node, MoleculeNode):
            nodes.append({
                "id": idx, "kind": "molecule", "item": node.item.id,
                "status": node.status.value, "v_m": node.v_m, "expanded": node.expanded,
            })
        else:
            nodes.append({
                "id": idx, "kind": "reaction", "template": node.action.template_id,
                "status": node.status.value, "q_bar": node.q_bar, "n": node.n,
            })
        if parent_idx is not None:
            edges.append([parent_idx, idx])
        for child in node.children:
            visit(child, idx)

    visit(tree.root, None)
    return {
        "nodes": nodes,
        "edges": edges,
        "molecule_nodes": tree.molecule_nodes,
        "reaction_nodes": tree.reaction_nodes,
        "iterations": tree.iterations,
    }


def snapshot_json(tree: SearchTree) -> str:
    return json.dumps(snapshot(tree), sort_keys=True, indent=2) + "\n"


_DOT_COLORS = {Status.UNKNOWN: "gray80", Status.SUCCESS: "palegreen", Status.FAILURE: "lightcoral"}


def to_dot(tree: SearchTree) -> str:
    """Graphviz DOT rendering: molecule nodes as ellipses, reaction nodes as boxes."""
    lines = ["digraph search_tree {", "  rankdir=TB;"]
    counter = [0]

    def visit(node, parent_name: Optional[str]) -> None:
        name = f"n{counter[0]}"
        counter[0] += 1
        color = _DOT_COLORS[node.status]
        if isinstance(node, MoleculeNode):
            label = f"{node.item.id}\\nv={node.v_m:.3f}"
            lines.append(f'  {name} [label="{label}", style=filled, fillcolor={color}];')
        else:
            label = f"{node.action.template_id}\\nq={node.q_bar:.3f} n={node.n}"
            lines.append(
                f'  {name} [shape=box, label="{label}", style=filled, fillcolor={color}];')
        if parent_name is not None:
            lines.append(f"  {parent_name} -> {name};")
        for child in node.children:
            visit(child, name)

    visit(tree.root, None)
    lines.append("}")
    return "\n".join(lines) + "\n"
