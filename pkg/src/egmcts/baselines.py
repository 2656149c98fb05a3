"""Non-learning comparison planners sharing the oracle and outcome surfaces:
the constant-prior tree search, greedy depth-first search, and molecule-set
MCTS with random playouts."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import OracleUnavailable
from .items import ExpansionOracle, Item, OracleConfig, Stock
from .routes import Reaction, Route
from .search import ConstantScorer, PlanOutcome, SearchParams, plan


@dataclass(frozen=True)
class DfsParams:
    max_depth: int = 10
    iteration_limit: int = 500
    k: int = 50

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.iteration_limit < 1:
            raise ValueError("iteration_limit must be >= 1")


@dataclass(frozen=True)
class RolloutParams:
    max_rollout_depth: int = 5
    c: float = 0.5
    iteration_limit: int = 500
    k: int = 50

    def __post_init__(self):
        if self.max_rollout_depth < 0:
            raise ValueError("max_rollout_depth must be >= 0")
        if self.iteration_limit < 1:
            raise ValueError("iteration_limit must be >= 1")


def plan_eg_mcts_0(target: Item, stock: Stock, oracle: ExpansionOracle,
                   params: SearchParams, rng: random.Random) -> PlanOutcome:
    """The guided planner with the network replaced by a constant 0.5 scorer."""
    return plan(target, stock, oracle, ConstantScorer(0.5), params, rng)


class _BudgetExhausted(Exception):
    pass


class _CallCounter:
    """Counts oracle calls against the iteration limit; every expansion query
    is one iteration for every planner (playout queries included)."""

    def __init__(self, oracle: ExpansionOracle, limit: int, k: int):
        self.oracle = oracle
        self.cfg = OracleConfig(k=k)
        self.limit = limit
        self.calls = 0

    def expand(self, item: Item):
        if self.calls >= self.limit:
            raise _BudgetExhausted
        self.calls += 1
        return self.oracle.expand(item, self.cfg)


def _outcome(target: Item, solved: bool, first: Optional[int], calls: int,
             route: Optional[Route] = None) -> PlanOutcome:
    out = PlanOutcome(target_id=target.id, solved=solved,
                      iterations_to_first_solution=first, iterations_run=calls,
                      expanded_reaction_nodes=None, expanded_molecule_nodes=None)
    out.route = route
    return out


def plan_greedy_dfs(target: Item, stock: Stock, oracle: ExpansionOracle,
                    p: DfsParams) -> PlanOutcome:
    """Depth-first over molecule-set states, always trying the
    highest-probability template first and backtracking on failure.

    Deterministic: states keep their unsolved molecules sorted by id and the
    first one is always expanded next.  Depth counts reactions applied along
    the current path, bounded by max_depth.
    """
    counter = _CallCounter(oracle, p.iteration_limit, p.k)
    steps: list[Reaction] = []

    def dfs(state: tuple[Item, ...], depth: int) -> bool:
        if not state:
            return True
        if depth >= p.max_depth:
            return False
        mol = state[0]
        actions = counter.expand(mol)
        for action in actions:
            rest = {m.id: m for m in state[1:]}
            for r in action.reactants:
                if r not in stock:
                    rest.setdefault(r.id, r)
            new_state = tuple(rest[i] for i in sorted(rest))
            steps.append(Reaction(product=mol, reactants=action.reactants,
                                  template_id=action.template_id))
            if dfs(new_state, depth + 1):
                return True
            steps.pop()
        return False

    initial = () if target in stock else (target,)
    solved = False
    try:
        solved = dfs(initial, 0)
    except _BudgetExhausted:
        solved = False
    except OracleUnavailable as exc:
        exc.partial_outcome = _outcome(target, False, None, counter.calls)
        raise
    route = Route(target=target, steps=tuple(steps)) if solved else None
    return _outcome(target, solved, counter.calls if solved else None,
                    counter.calls, route)


class _SetNode:
    """Rollout-MCTS node over a full molecule set (stock members included)."""

    __slots__ = ("state", "parent", "edge", "prior", "children", "visits",
                 "value_sum", "solved", "closed")

    def __init__(self, state: tuple[Item, ...], parent: Optional["_SetNode"],
                 edge: Optional[Reaction], prior: float, stock: Stock):
        self.state = state
        self.parent = parent
        self.edge = edge
        self.prior = prior
        self.children: Optional[list["_SetNode"]] = None
        self.visits = 0
        self.value_sum = 0.0
        self.solved = all(m in stock for m in state)
        # closed: proven hopeless (no templates for the expanded molecule, or
        # every child closed).  Poor man's failure propagation keeps the loop
        # finite when the whole frontier dies.
        self.closed = False

    def mean_value(self) -> float:
        return self.value_sum / max(1, self.visits)


def _apply(state: tuple[Item, ...], mol: Item, reactants) -> tuple[Item, ...]:
    merged = {m.id: m for m in state if m.id != mol.id}
    for r in reactants:
        merged.setdefault(r.id, r)
    return tuple(merged[i] for i in sorted(merged))


def _stock_fraction(state: Sequence[Item], stock: Stock) -> float:
    if not state:
        return 1.0
    return sum(1 for m in state if m in stock) / len(state)


def _close(node: _SetNode) -> None:
    node.closed = True
    parent = node.parent
    while parent is not None:
        if parent.children is not None and all(c.closed for c in parent.children):
            parent.closed = True
            parent = parent.parent
        else:
            break


def plan_mcts_rollout(target: Item, stock: Stock, oracle: ExpansionOracle,
                      p: RolloutParams, rng: random.Random) -> PlanOutcome:
    """Molecule-set MCTS: selection by the usual score shape with the mean
    playout value standing in for the running mean; leaf evaluation by a
    random playout of up to max_rollout_depth steps, scored as the reached
    state's in-stock fraction (1.0 when fully reduced).

    A playout that fully reduces the state counts as a solution; its steps
    extend the tree path into the reported route.
    """
    counter = _CallCounter(oracle, p.iteration_limit, p.k)
    root = _SetNode((target,), None, None, 1.0, stock)
    if root.solved:
        return _outcome(target, True, 0, 0, Route(target=target, steps=()))

    def path_route(node: _SetNode, extra: Sequence[Reaction]) -> Route:
        steps: list[Reaction] = []
        cur = node
        while cur is not None:
            if cur.edge is not None:
                steps.append(cur.edge)
            cur = cur.parent
        steps.reverse()
        steps.extend(extra)
        return Route(target=target, steps=tuple(steps))

    def pick_unsolved(state: Sequence[Item], randomly: bool) -> Optional[Item]:
        unsolved = [m for m in state if m not in stock]
        if not unsolved:
            return None
        return unsolved[rng.randrange(len(unsolved))] if randomly else unsolved[0]

    def playout(state: tuple[Item, ...]) -> tuple[float, Optional[list[Reaction]]]:
        steps: list[Reaction] = []
        for _ in range(p.max_rollout_depth):
            mol = pick_unsolved(state, randomly=True)
            if mol is None:
                return 1.0, steps
            try:
                actions = counter.expand(mol)
            except _BudgetExhausted:
                break
            if not actions:
                break
            action = actions[rng.randrange(len(actions))]
            steps.append(Reaction(product=mol, reactants=action.reactants,
                                  template_id=action.template_id))
            state = _apply(state, mol, action.reactants)
        if pick_unsolved(state, randomly=False) is None:
            return 1.0, steps
        return _stock_fraction(state, stock), None

    solved_route: Optional[Route] = None
    first_solution: Optional[int] = None
    try:
        while counter.calls < p.iteration_limit and not root.closed:
            node = root
            path = [root]
            while node.children is not None and not node.closed:
                best, best_score = None, -math.inf
                for child in node.children:
                    if child.closed:
                        continue
                    score = (child.mean_value() / max(1, child.visits)
                             + p.c * child.prior * math.sqrt(node.visits)
                             / (1 + child.visits))
                    if score > best_score:
                        best, best_score = child, score
                if best is None:
                    _close(node)
                    break
                node = best
                path.append(node)
            if node.closed or node.children is not None:
                continue
            mol = pick_unsolved(node.state, randomly=False)
            try:
                actions = counter.expand(mol)
            except _BudgetExhausted:
                break
            if not actions:
                _close(node)
                value = 0.0
            else:
                node.children = []
                for action in actions:
                    child_state = _apply(node.state, mol, action.reactants)
                    edge = Reaction(product=mol, reactants=action.reactants,
                                    template_id=action.template_id)
                    child = _SetNode(child_state, node, edge, action.probability, stock)
                    node.children.append(child)
                    if child.solved and solved_route is None:
                        solved_route = path_route(child, ())
                        first_solution = counter.calls
                if solved_route is not None:
                    break
                value, playout_steps = playout(node.state)
                if playout_steps is not None:
                    solved_route = path_route(node, playout_steps)
                    first_solution = counter.calls
                    value = 1.0
            for visited in path:
                visited.visits += 1
                visited.value_sum += value
            if solved_route is not None:
                break
    except OracleUnavailable as exc:
        exc.partial_outcome = _outcome(target, False, None, counter.calls)
        raise

    solved = solved_route is not None
    return _outcome(target, solved, first_solution, counter.calls, solved_route)
