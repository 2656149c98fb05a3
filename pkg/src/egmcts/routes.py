"""Route extraction from solved trees, validity checks, the brute-force
optimality oracle, and route-vs-reference matching."""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .errors import EmptyRoute, InconsistentTree, NotSolved
from .fingerprints import text_fingerprint
from .items import ExpansionOracle, Item, OracleConfig, Stock
from .tree import MoleculeNode, SearchTree, Status


@dataclass(frozen=True)
class Reaction:
    """One route step: product decomposed into reactants via a template."""

    product: Item
    reactants: tuple[Item, ...]
    template_id: str


@dataclass(frozen=True)
class Route:
    """Top-down reaction list: each step's product is the target or a reactant
    of an earlier step; every unconsumed item must be in stock."""

    target: Item
    steps: tuple[Reaction, ...]

    def __len__(self) -> int:
        return len(self.steps)


def extract_route(tree: SearchTree) -> Route:
    """Reads one route out of a solved tree by a breadth-first queue walk.

    At each non-stock molecule the successful reaction child with the highest
    q_bar is taken (ties resolved by insertion order).
    """
    if tree.root.status is not Status.SUCCESS:
        raise NotSolved(f"root {tree.root.item.id!r} is not successful")
    steps: list[Reaction] = []
    queue: deque[MoleculeNode] = deque([tree.root])
    while queue:
        mol = queue.popleft()
        if mol.item in tree.stock:
            continue
        best = None
        for child in mol.children:
            if child.status is Status.SUCCESS and (best is None or child.q_bar > best.q_bar):
                best = child
        if best is None:
            raise InconsistentTree(
                f"molecule {mol.item.id!r} is on the success path but has no successful child"
            )
        steps.append(Reaction(product=mol.item,
                              reactants=tuple(c.item for c in best.children),
                              template_id=best.action.template_id))
        queue.extend(best.children)
    return Route(target=tree.root.item, steps=tuple(steps))


def validate_route(route: Route, stock: Stock) -> bool:
    """True iff the route is ordered top-down and every leaf item is in stock."""
    if not route.steps:
        return route.target in stock
    produced_later: list[set[str]] = [set() for _ in range(len(route.steps) + 1)]
    for i in range(len(route.steps) - 1, -1, -1):
        produced_later[i] = produced_later[i + 1] | {route.steps[i].product.id}
    # Step order: first product is the target; later products must have been
    # introduced as a reactant of an earlier step.
    if route.steps[0].product != route.target:
        return False
    seen_reactants: set[str] = set()
    for i, step in enumerate(route.steps):
        if i > 0 and step.product.id not in seen_reactants:
            return False
        seen_reactants.update(r.id for r in step.reactants)
        # Leaf condition: a reactant never produced by a later step must be stock.
        for r in step.reactants:
            if r.id not in produced_later[i + 1] and r not in stock:
                return False
    return True


def brute_force_solve(target: Item, stock: Stock, oracle: ExpansionOracle,
                      depth_cap: int, cfg: Optional[OracleConfig] = None) -> Optional[int]:
    """Minimal number of reactions reducing target fully to stock, or None.

    Exhaustive AND-OR enumeration with memoization on (item id, remaining
    depth).  Kept independent of the tree search machinery on purpose: this is
    the oracle the planners are checked against.
    """
    if depth_cap > 8:
        raise ValueError(f"depth_cap must be <= 8 for exhaustive search, got {depth_cap}")
    if cfg is None:
        cfg = OracleConfig(k=64)
    memo: dict[tuple[str, int], Optional[int]] = {}

    def solve(item: Item, depth: int) -> Optional[int]:
        if item in stock:
            return 0
        if depth == 0:
            return None
        key = (item.id, depth)
        if key in memo:
            return memo[key]
        best: Optional[int] = None
        for action in oracle.expand(item, cfg):
            total = 1
            for reactant in action.reactants:
                sub = solve(reactant, depth - 1)
                if sub is None:
                    total = None
                    break
                total += sub
            if total is not None and (best is None or total < best):
                best = total
        memo[key] = best
        return best

    return solve(target, depth_cap)


@dataclass(frozen=True)
class MatchReport:
    matched_steps: int
    total_steps: int

    @property
    def degree(self) -> float:
        return self.matched_steps / self.total_steps


def matching_degree(generated: Route, reference: Route) -> MatchReport:
    """Fraction of generated steps found, in order, in the reference route.

    A generated step matches a reference step at or after the cursor when the
    products agree and the generated reactant multiset is contained in the
    reference one (extra reference reactants are by-products and ignored).
    """
    if not generated.steps or not reference.steps:
        raise EmptyRoute("matching requires two non-empty routes")
    matched = 0
    cursor = 0
    for step in generated.steps:
        want = Counter(r.id for r in step.reactants)
        for j in range(cursor, len(reference.steps)):
            ref = reference.steps[j]
            if ref.product.id != step.product.id:
                continue
            have = Counter(r.id for r in ref.reactants)
            if all(have[k] >= v for k, v in want.items()):
                matched += 1
                cursor = j + 1
                break
    return MatchReport(matched_steps=matched, total_steps=len(generated.steps))


def route_to_dict(route: Route, stock: Optional[Stock] = None) -> dict:
    doc = {
        "target": route.target.id,
        "steps": [
            {
                "product": s.product.id,
                "reactants": [r.id for r in s.reactants],
                "template_id": s.template_id,
            }
            for s in route.steps
        ],
    }
    if stock is not None:
        produced = {s.product.id for s in route.steps}
        leaves = sorted({
            r.id for s in route.steps for r in s.reactants if r.id not in produced
        })
        if not route.steps and route.target in stock:
            leaves = [route.target.id]
        doc["stock_leaves"] = leaves
    return doc


def route_from_dict(doc: dict, item_fn: Optional[Callable[[str], Item]] = None) -> Route:
    """Rebuilds a Route from its JSON form.

    Reference routes are usually hand-entered with ids only; absent a
    fingerprint resolver, ids are fingerprinted deterministically (matching
    only ever compares ids).
    """
    if item_fn is None:
        item_fn = lambda i: Item(i, text_fingerprint(i))
    steps = tuple(
        Reaction(product=item_fn(s["product"]),
                 reactants=tuple(item_fn(r) for r in s["reactants"]),
                 template_id=s.get("template_id", ""))
        for s in doc["steps"]
    )
    return Route(target=item_fn(doc["target"]), steps=steps)


def save_route(path, route: Route, stock: Optional[Stock] = None) -> None:
    Path(path).write_text(json.dumps(route_to_dict(route, stock), sort_keys=True, indent=2) + "\n")


def load_route(path, item_fn: Optional[Callable[[str], Item]] = None) -> Route:
    return route_from_dict(json.loads(Path(path).read_text()), item_fn)
