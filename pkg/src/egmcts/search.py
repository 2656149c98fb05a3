"""The guided tree-search planning loop: PUCT selection, oracle expansion with
network-scored priors, and the reward/update pass."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Protocol, Sequence

from .errors import NoSelectableLeaf, OracleUnavailable
from .items import ExpansionOracle, Item, OracleConfig, Stock, TemplateAction
from .tree import (MoleculeNode, ReactionNode, SearchTree, Status,
                   propagate_status)

if TYPE_CHECKING:
    from .routes import Route


@dataclass(frozen=True)
class SearchParams:
    """Planning hyper-parameters.

    stop_on_first_solution defaults to on (first-route efficiency runs);
    switch it off to keep searching after a solution, e.g. when hunting for
    the route that best matches a reference.
    """

    c: float = 0.5
    z: float = 10.0
    iteration_limit: int = 500
    k: int = 50
    stop_on_first_solution: bool = True

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"exploration constant c must be > 0, got {self.c}")
        if self.z <= 1:
            raise ValueError(f"terminal reward z must be > 1, got {self.z}")
        if self.iteration_limit < 1:
            raise ValueError("iteration_limit must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass
class PlanOutcome:
    """Result of one planning run, shared by all planners."""

    target_id: str
    solved: bool
    iterations_to_first_solution: Optional[int]
    iterations_run: int
    expanded_reaction_nodes: Optional[int]
    expanded_molecule_nodes: Optional[int]
    tree: Optional[SearchTree] = None
    route: Optional["Route"] = None

    def __post_init__(self):
        if self.solved != (self.iterations_to_first_solution is not None):
            raise ValueError("solved must hold exactly when a first-solution iteration exists")

    def to_dict(self) -> dict:
        return {
            "target": self.target_id,
            "solved": self.solved,
            "iterations_to_first_solution": self.iterations_to_first_solution,
            "iterations_run": self.iterations_run,
            "expanded_reaction_nodes": self.expanded_reaction_nodes,
            "expanded_molecule_nodes": self.expanded_molecule_nodes,
        }


class ActionScorer(Protocol):
    """Supplies the initial q values for freshly attached reaction nodes."""

    def score_actions(self, item: Item, actions: Sequence[TemplateAction]) -> list[float]: ...


class ConstantScorer:
    """Scores every action with a fixed value (0.5 gives the unguided planner)."""

    def __init__(self, value: float = 0.5):
        self.value = value

    def score_actions(self, item: Item, actions: Sequence[TemplateAction]) -> list[float]:
        return [self.value] * len(actions)


def puct_score(parent: MoleculeNode, child: ReactionNode, c: float) -> float:
    """Selection score of a reaction child.

    exploitation: q_bar / max(1, n) -- the guard covers fresh nodes with n=0,
    for n >= 1 this is the selection rule verbatim.
    exploration: c * P * sqrt(n_up) / (1 + n), where n_up is the update count
    of the grandparent reaction node, or the sum over the sibling set when the
    parent molecule is the root.
    """
    grandparent = parent.parent
    if grandparent is not None:
        n_up = grandparent.n
    else:
        n_up = sum(sib.n for sib in parent.children)
    exploit = child.q_bar / max(1, child.n)
    explore = c * child.action.probability * math.sqrt(n_up) / (1 + child.n)
    return exploit + explore


def select(tree: SearchTree, c: float, rng: random.Random) -> MoleculeNode:
    """Descends to an unexpanded, undecided molecule node.

    Molecule nodes take the argmax-score child among undecided children (ties
    to the earliest-attached); reaction nodes prefer a uniformly random
    unexpanded child, else a uniformly random undecided one.  Raises
    NoSelectableLeaf when no frontier remains (the search is decided).
    """
    node = tree.root
    while True:
        if not node.expanded:
            return node
        best: Optional[ReactionNode] = None
        best_score = -math.inf
        for child in node.children:
            if child.status.terminal:
                continue
            score = puct_score(node, child, c)
            if score > best_score:
                best = child
                best_score = score
        if best is None:
            raise NoSelectableLeaf(
                f"no undecided child under molecule {node.item.id!r}; search is decided"
            )
        unexpanded = [m for m in best.children if not m.expanded]
        if unexpanded:
            node = unexpanded[rng.randrange(len(unexpanded))]
        else:
            open_children = [m for m in best.children if m.status is not Status.SUCCESS]
            if not open_children:
                raise NoSelectableLeaf(
                    f"reaction {best.action.template_id!r} has no open child"
                )
            node = open_children[rng.randrange(len(open_children))]


def expand(tree: SearchTree, leaf: MoleculeNode, oracle: ExpansionOracle,
           scorer: ActionScorer, params: SearchParams) -> None:
    """One oracle call: fetch top-k actions, drop those that regenerate an
    ancestor item (cycle guard), score survivors, attach them."""
    actions = oracle.expand(leaf.item, OracleConfig(k=params.k))
    ancestors = leaf.ancestor_item_ids()
    kept = [a for a in actions if not any(r.id in ancestors for r in a.reactants)]
    q0s = scorer.score_actions(leaf.item, kept) if kept else []
    tree.attach_expansion(leaf, kept, q0s)


def reward(node: ReactionNode, z: float) -> float:
    """+z on success, -z on failure, otherwise the mean child value."""
    if node.status is Status.SUCCESS:
        return z
    if node.status is Status.FAILURE:
        return -z
    return sum(c.v_m for c in node.children) / len(node.children)


def update(tree: SearchTree, leaf: MoleculeNode, z: float) -> None:
    """Walks leaf -> root refreshing statuses, molecule values, and the
    reaction nodes' running mean scores."""
    node = leaf
    while node is not None:
        if isinstance(node, MoleculeNode):
            propagate_status(tree, node)
            if node.status is not Status.FAILURE and node.children:
                node.v_m = max(c.q_bar for c in node.children)
        else:
            node.record_reward(reward(node, z))
        node = node.parent


def plan(target: Item, stock: Stock, oracle: ExpansionOracle,
         scorer: ActionScorer, params: SearchParams,
         rng: random.Random) -> PlanOutcome:
    """Runs select/expand/update until solved, decided, or out of iterations.

    One oracle call per iteration, so iterations_run equals the number of
    expansion calls made.  On transport failure the partial outcome is
    attached to the raised OracleUnavailable.
    """
    tree = SearchTree(target, stock)
    first_solution: Optional[int] = None
    if tree.root.status is Status.SUCCESS:
        first_solution = 0

    def outcome() -> PlanOutcome:
        return PlanOutcome(
            target_id=target.id,
            solved=first_solution is not None,
            iterations_to_first_solution=first_solution,
            iterations_run=tree.iterations,
            expanded_reaction_nodes=tree.reaction_nodes,
            expanded_molecule_nodes=tree.molecule_nodes,
            tree=tree,
        )

    while tree.iterations < params.iteration_limit:
        if tree.root.status is Status.FAILURE:
            break
        if first_solution is not None and params.stop_on_first_solution:
            break
        try:
            leaf = select(tree, params.c, rng)
        except NoSelectableLeaf:
            break
        tree.iterations += 1
        try:
            expand(tree, leaf, oracle, scorer, params)
        except OracleUnavailable as exc:
            exc.partial_outcome = outcome()
            raise
        update(tree, leaf, params.z)
        if first_solution is None and tree.root.status is Status.SUCCESS:
            first_solution = tree.iterations
    return outcome()
