"""Shared test machinery: independent oracles for status propagation and the
random tree grower both the unit and acceptance suites use."""

import random

from conftest import mk_action, mk_item
from egmcts.items import StockSet
from egmcts.tree import MoleculeNode, SearchTree, Status, propagate_status


def brute_force_statuses(tree: SearchTree) -> dict:
    """Independent oracle: iterate the AND/OR rules to convergence from the
    base facts, ignoring the incrementally maintained statuses."""
    nodes = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        nodes.append(node)
        stack.extend(node.children)
    status = {id(n): Status.UNKNOWN for n in nodes}
    changed = True
    while changed:
        changed = False
        for node in nodes:
            if status[id(node)] is not Status.UNKNOWN:
                continue
            if isinstance(node, MoleculeNode):
                if node.item in tree.stock:
                    new = Status.SUCCESS
                elif any(status[id(c)] is Status.SUCCESS for c in node.children):
                    new = Status.SUCCESS
                elif node.expanded and (not node.children or all(
                        status[id(c)] is Status.FAILURE for c in node.children)):
                    new = Status.FAILURE
                else:
                    new = Status.UNKNOWN
            else:
                if any(status[id(c)] is Status.FAILURE for c in node.children):
                    new = Status.FAILURE
                elif all(status[id(c)] is Status.SUCCESS for c in node.children):
                    new = Status.SUCCESS
                else:
                    new = Status.UNKNOWN
            if new is not status[id(node)]:
                status[id(node)] = new
                changed = True
    return {id(n): status[id(n)] for n in nodes}


def all_nodes(tree: SearchTree):
    stack = [tree.root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(node.children)


def random_tree(seed: int, max_nodes: int = 30) -> SearchTree:
    """Grows a tree through random attach_expansion calls, propagating after
    each, the way a search would."""
    rng = random.Random(seed)
    stock = StockSet(["S1", "S2", "S3"])
    tree = SearchTree(mk_item("root"), stock)
    counter = [0]
    frontier = [tree.root]
    while frontier and tree.molecule_nodes + tree.reaction_nodes < max_nodes:
        leaf = frontier.pop(rng.randrange(len(frontier)))
        if leaf.expanded:
            continue
        roll = rng.random()
        if roll < 0.2:
            tree.attach_expansion(leaf, [], [])
        else:
            actions = []
            for i in range(rng.randint(1, 3)):
                reactants = []
                for _ in range(rng.randint(1, 3)):
                    if rng.random() < 0.4:
                        reactants.append(rng.choice(["S1", "S2", "S3"]))
                    else:
                        counter[0] += 1
                        reactants.append(f"m{counter[0]}")
                actions.append(mk_action(f"t{counter[0]}_{i}", reactants))
            tree.attach_expansion(leaf, actions, [0.5] * len(actions))
            for reaction in leaf.children:
                frontier.extend(m for m in reaction.children if not m.expanded)
        propagate_status(tree, leaf)
    return tree
