"""Reaction-network construction from generic reaction records, node
outdegree/cost statistics, and the target-filtering procedures used to mine
training sets."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .baselines import DfsParams, plan_greedy_dfs
from .errors import CyclicGraph, UnknownNode
from .items import ExpansionOracle, Item, Stock, StockSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReactionRecord:
    reactants: tuple[str, ...]
    products: tuple[str, ...]

    def __post_init__(self):
        if not self.reactants or not self.products:
            raise ValueError("a reaction record needs reactants and products")


class NocGraph:
    """Directed reactant -> product graph grown from the stock set.

    Stock nodes are the leaves (cost 0); every other node was derived by some
    record whose reactants were all already present.
    """

    def __init__(self, stock_ids: frozenset[str]):
        self.stock_ids = stock_ids
        self.nodes: set[str] = set(stock_ids)
        self.out_edges: dict[str, set[str]] = {}
        self.in_edges: dict[str, set[str]] = {}
        self._topo: Optional[list[str]] = None
        self._costs: dict[str, int] = {}

    def is_stock(self, node_id: str) -> bool:
        return node_id in self.stock_ids

    def outdegree(self, node_id: str) -> int:
        if node_id not in self.nodes:
            raise UnknownNode(node_id)
        return len(self.out_edges.get(node_id, ()))

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.nodes


def build_noc(records: Sequence[ReactionRecord], stock: StockSet) -> NocGraph:
    """Fixed-point closure: passes over the records add any product whose
    reactants are all present, until nothing changes.

    Edges are the union over every record applicable at the closure, so the
    result is independent of record order.  Edges into stock nodes are not
    added (stock members are leaves, never treated as products).  The result
    is verified acyclic; a cycle in the record set is an input error.
    """
    graph = NocGraph(frozenset(stock.ids))
    changed = True
    while changed:
        changed = False
        additions: set[str] = set()
        for record in records:
            if all(r in graph.nodes for r in record.reactants):
                for p in record.products:
                    if p not in graph.nodes and p not in additions:
                        additions.add(p)
        if additions:
            graph.nodes.update(additions)
            changed = True
    for record in records:
        if all(r in graph.nodes for r in record.reactants):
            for p in record.products:
                if graph.is_stock(p):
                    continue
                for r in record.reactants:
                    graph.out_edges.setdefault(r, set()).add(p)
                    graph.in_edges.setdefault(p, set()).add(r)
    graph._topo = _topological_order(graph)
    return graph


def _topological_order(graph: NocGraph) -> list[str]:
    indeg = {n: 0 for n in graph.nodes}
    for p, parents in graph.in_edges.items():
        indeg[p] = len(parents)
    ready = sorted(n for n, d in indeg.items() if d == 0)
    order: list[str] = []
    queue = list(ready)
    while queue:
        node = queue.pop()
        order.append(node)
        for child in sorted(graph.out_edges.get(node, ()), reverse=True):
            indeg[child] -= 1
            if indeg[child] == 0:
                queue.append(child)
    if len(order) != len(graph.nodes):
        raise CyclicGraph("reaction records induce a directed cycle")
    return order


def node_cost(graph: NocGraph, node_id: str) -> int:
    """Longest path (in edges) from the node back to stock leaves, via
    memoized dynamic programming in topological order."""
    if node_id not in graph.nodes:
        raise UnknownNode(node_id)
    if node_id not in graph._costs:
        assert graph._topo is not None
        for n in graph._topo:
            if n in graph._costs:
                continue
            if graph.is_stock(n):
                graph._costs[n] = 0
            else:
                parents = graph.in_edges.get(n, set())
                graph._costs[n] = 1 + max(graph._costs[u] for u in parents) if parents else 0
    return graph._costs[node_id]


def filter_targets(graph: NocGraph, min_outdegree: int, min_cost: int) -> list[str]:
    """Non-stock node ids meeting both thresholds, in sorted order."""
    out = []
    for node in sorted(graph.nodes):
        if graph.is_stock(node):
            continue
        if graph.outdegree(node) >= min_outdegree and node_cost(graph, node) >= min_cost:
            out.append(node)
    return out


def hardness_screen(candidates: Sequence[Item], stock: Stock,
                    oracle: ExpansionOracle, screen_limit: int = 100,
                    dfs_params: Optional[DfsParams] = None) -> list[str]:
    """Ids of candidates greedy DFS fails to solve within the screen limit.

    Per-candidate oracle errors are logged and the candidate skipped; one bad
    id must not sink a whole screening run.
    """
    if dfs_params is None:
        dfs_params = DfsParams(iteration_limit=screen_limit)
    else:
        dfs_params = DfsParams(max_depth=dfs_params.max_depth,
                               iteration_limit=screen_limit, k=dfs_params.k)
    hard = []
    for candidate in candidates:
        try:
            outcome = plan_greedy_dfs(candidate, stock, oracle, dfs_params)
        except Exception as exc:  # noqa: BLE001 - recorded, not fatal
            log.warning("hardness screen skipped %s: %s", candidate.id, exc)
            continue
        if not outcome.solved:
            hard.append(candidate.id)
    return hard


def make_split(ids: Sequence[str], sizes: tuple[int, int, int],
               seed: int) -> dict:
    """Seeded random train/validation/test split manifest."""
    n_train, n_val, n_test = sizes
    if n_train + n_val + n_test > len(ids):
        raise ValueError(f"split sizes {sizes} exceed {len(ids)} candidate ids")
    pool = sorted(ids)
    random.Random(seed).shuffle(pool)
    return {
        "seed": seed,
        "train": sorted(pool[:n_train]),
        "validation": sorted(pool[n_train:n_train + n_val]),
        "test": sorted(pool[n_train + n_val:n_train + n_val + n_test]),
    }


def load_records(path) -> list[ReactionRecord]:
    """Newline-delimited JSON: {"reactants": [...], "products": [...]}."""
    records = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        records.append(ReactionRecord(tuple(doc["reactants"]), tuple(doc["products"])))
    return records


def save_records(path, records: Sequence[ReactionRecord]) -> None:
    lines = [json.dumps({"reactants": list(r.reactants), "products": list(r.products)},
                        sort_keys=True) for r in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def graph_csv(graph: NocGraph) -> tuple[str, str]:
    """(nodes CSV, edges CSV) with outdegree and cost columns."""
    node_lines = ["id,is_stock,outdegree,cost"]
    for node in sorted(graph.nodes):
        node_lines.append(
            f"{node},{int(graph.is_stock(node))},{graph.outdegree(node)},{node_cost(graph, node)}")
    edge_lines = ["source,target"]
    for src in sorted(graph.out_edges):
        for dst in sorted(graph.out_edges[src]):
            edge_lines.append(f"{src},{dst}")
    return "\n".join(node_lines) + "\n", "\n".join(edge_lines) + "\n"
