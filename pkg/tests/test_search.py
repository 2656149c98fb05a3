import math
import random

import pytest

from conftest import mk_action, mk_item
from egmcts.baselines import plan_eg_mcts_0
from egmcts.errors import NoSelectableLeaf, OracleUnavailable
from egmcts.items import StockSet
from egmcts.routes import extract_route, validate_route
from egmcts.search import (ConstantScorer, PlanOutcome, SearchParams, expand,
                           plan, puct_score, reward, select, update)
from egmcts.synthetic import Rule, SyntheticDomain, generate_instances, random_domain
from egmcts.tree import MoleculeNode, ReactionNode, SearchTree, Status


def build_parent(child_specs, grandparent_n=None):
    """Molecule node with reaction children; child_specs are (q_bar, n, p)."""
    parent = MoleculeNode(item=mk_item("P"), v_m=0.5)
    if grandparent_n is not None:
        gp = ReactionNode(action=mk_action("gp", ["x"]), parent=None, q_bar=0.5)
        gp.n = grandparent_n
        parent.parent = gp
    for i, (q_bar, n, p) in enumerate(child_specs):
        child = ReactionNode(action=mk_action(f"t{i}", [f"r{i}"], probability=p),
                             parent=parent, q_bar=q_bar, q_history_sum=0.0)
        child.n = n
        parent.children.append(child)
    return parent


def independent_puct(q_bar, n, p, n_up, c):
    """Different arithmetic arrangement of the same selection formula."""
    max_n = max(1, n)
    return (q_bar * (1 + n) + c * p * math.sqrt(n_up) * max_n) / (max_n * (1 + n))


def test_puct_point_value():
    # q=0.6, n=2, p=0.5, grandparent n=4, c=0.5 -> 0.6/2 + 0.5*0.5*2/3
    parent = build_parent([(0.6, 2, 0.5)], grandparent_n=4)
    expected = 0.6 / 2 + 0.5 * 0.5 * math.sqrt(4) / 3
    assert expected == pytest.approx(0.4666666667, abs=1e-9)
    assert puct_score(parent, parent.children[0], 0.5) == pytest.approx(expected, abs=1e-9)


def test_puct_zero_prior_vanishes_exploration():
    parent = build_parent([(0.7, 1, 0.0)], grandparent_n=9)
    assert puct_score(parent, parent.children[0], 0.5) == 0.7


def test_puct_fresh_node_returns_q0():
    parent = build_parent([(0.42, 0, 0.9)], grandparent_n=0)
    assert puct_score(parent, parent.children[0], 0.5) == 0.42


def test_puct_root_children_use_sibling_counts():
    parent = build_parent([(0.5, 2, 0.5), (0.1, 3, 0.5)])  # no grandparent
    n_up = 5
    expected = 0.5 / 2 + 0.5 * 0.5 * math.sqrt(n_up) / 3
    assert puct_score(parent, parent.children[0], 0.5) == pytest.approx(expected)


def test_puct_scaling_c_scales_only_exploration():
    parent = build_parent([(0.6, 2, 0.5)], grandparent_n=4)
    base = puct_score(parent, parent.children[0], 0.5)
    doubled = puct_score(parent, parent.children[0], 1.0)
    assert doubled - base == pytest.approx(base - 0.6 / 2)


def test_puct_argmax_matches_independent_evaluator():
    rng = random.Random(123)
    for _ in range(2000):
        n_children = rng.randint(1, 6)
        specs = [(rng.uniform(-10, 10), rng.randint(0, 20), rng.random())
                 for _ in range(n_children)]
        gp_n = rng.choice([None, rng.randint(0, 30)])
        parent = build_parent(specs, grandparent_n=gp_n)
        n_up = gp_n if gp_n is not None else sum(n for _, n, _ in specs)
        scores = [puct_score(parent, ch, 0.5) for ch in parent.children]
        oracle = [independent_puct(q, n, p, n_up, 0.5) for q, n, p in specs]
        assert max(range(n_children), key=lambda i: (scores[i], -i)) == \
            max(range(n_children), key=lambda i: (oracle[i], -i))


def test_select_unexpanded_root(tiny_domain):
    tree = SearchTree(tiny_domain.item("AB"), tiny_domain.stock)
    assert select(tree, 0.5, random.Random(0)) is tree.root


def test_select_descends_argmax():
    stock = StockSet(["S"])
    tree = SearchTree(mk_item("X"), stock)
    tree.attach_expansion(tree.root, [mk_action("lo", ["a"]), mk_action("hi", ["b"])],
                          [0.4, 0.7])
    leaf = select(tree, 0.5, random.Random(0))
    assert leaf.item.id == "b"


def test_select_prefers_unexpanded_reaction_child():
    stock = StockSet(["S"])
    tree = SearchTree(mk_item("X"), stock)
    tree.attach_expansion(tree.root, [mk_action("t", ["a", "b"])], [0.5])
    (reaction,) = tree.root.children
    a = next(m for m in reaction.children if m.item.id == "a")
    tree.attach_expansion(a, [mk_action("t2", ["c"])], [0.5])
    for seed in range(10):
        leaf = select(tree, 0.5, random.Random(seed))
        assert leaf.item.id in {"b", "c"}
    # b (unexpanded, directly under the reaction) must be chosen over
    # descending through the expanded a at the reaction-node level.
    picks = {select(tree, 0.5, random.Random(s)).item.id for s in range(20)}
    assert "b" in picks


def test_select_no_leaf_when_decided():
    stock = StockSet(["A", "B"])
    tree = SearchTree(mk_item("AB"), stock)
    tree.attach_expansion(tree.root, [mk_action("t", ["A", "B"])], [0.5])
    update(tree, tree.root, 10.0)
    assert tree.root.status is Status.SUCCESS
    with pytest.raises(NoSelectableLeaf):
        select(tree, 0.5, random.Random(0))


def test_expand_filters_ancestor_loops():
    # oracle returning an action that regenerates the expanded item itself
    class LoopOracle:
        def item(self, i):
            return mk_item(i)

        def expand(self, item, cfg):
            if item.id == "ABX":
                return [mk_action("t_ok", ["AB"]), mk_action("t_loop", ["ABX2", "ABX"])]
            return []

    stock = StockSet(["S"])
    tree = SearchTree(mk_item("ABX"), stock)
    expand(tree, tree.root, LoopOracle(), ConstantScorer(0.5), SearchParams())
    assert [r.action.template_id for r in tree.root.children] == ["t_ok"]


def test_expand_empty_marks_failure(tiny_domain):
    tree = SearchTree(tiny_domain.item("ZZ"), tiny_domain.stock)
    expand(tree, tree.root, tiny_domain, ConstantScorer(0.5), SearchParams())
    assert tree.root.status is Status.FAILURE


def test_expand_scores_attach():
    class TwoScorer:
        def score_actions(self, item, actions):
            return [0.3, 0.8][:len(actions)]

    class TwoOracle:
        def item(self, i):
            return mk_item(i)

        def expand(self, item, cfg):
            return [mk_action("t1", ["a"]), mk_action("t2", ["b"])]

    tree = SearchTree(mk_item("X"), StockSet(["S"]))
    expand(tree, tree.root, TwoOracle(), TwoScorer(), SearchParams())
    qs = [r.q_bar for r in tree.root.children]
    ns = [r.n for r in tree.root.children]
    assert qs == [0.3, 0.8]
    assert ns == [0, 0]


def test_reward_cases():
    node = ReactionNode(action=mk_action("t", ["a"]), parent=None, q_bar=0.5)
    node.status = Status.SUCCESS
    assert reward(node, 10.0) == 10.0
    node.status = Status.FAILURE
    assert reward(node, 10.0) == -10.0
    node.status = Status.UNKNOWN
    node.children = [MoleculeNode(item=mk_item("a"), v_m=0.4),
                     MoleculeNode(item=mk_item("b"), v_m=0.6)]
    assert reward(node, 10.0) == pytest.approx(0.5)


def test_update_running_mean():
    stock = StockSet(["S"])
    tree = SearchTree(mk_item("X"), stock)
    tree.attach_expansion(tree.root, [mk_action("t", ["a"])], [0.5])
    (reaction,) = tree.root.children
    (a,) = reaction.children
    a.v_m = 0.7
    update(tree, a, 10.0)
    # reward = mean child v_m of the unknown reaction = 0.7 -> mean(0.5, 0.7)
    assert reaction.q_bar == pytest.approx(0.6)
    assert reaction.n == 1


def test_update_success_reward():
    # root -> t1 -> a; expanding a to all-stock reactants proves t1 and pays
    # it +z on the walk up: q_bar = (0.5 + 10) / 2.
    stock = StockSet(["A", "B"])
    tree = SearchTree(mk_item("X"), stock)
    tree.attach_expansion(tree.root, [mk_action("t1", ["a"])], [0.5])
    (t1,) = tree.root.children
    (a,) = t1.children
    tree.attach_expansion(a, [mk_action("t2", ["A", "B"])], [0.5])
    update(tree, a, 10.0)
    assert t1.status is Status.SUCCESS
    assert t1.q_bar == pytest.approx((0.5 + 10.0) / 2)  # 5.25
    assert t1.n == 1
    assert tree.root.status is Status.SUCCESS
    assert tree.root.v_m == pytest.approx(5.25)


def test_update_vm_is_max_child_qbar():
    stock = StockSet(["S"])
    tree = SearchTree(mk_item("X"), stock)
    tree.attach_expansion(tree.root, [mk_action("t1", ["a"]), mk_action("t2", ["b"])],
                          [0.2, 0.9])
    update(tree, tree.root, 10.0)
    assert tree.root.v_m == pytest.approx(max(r.q_bar for r in tree.root.children))


def test_plan_target_in_stock(tiny_domain):
    out = plan(tiny_domain.item("A"), tiny_domain.stock, tiny_domain,
               ConstantScorer(0.5), SearchParams(), random.Random(0))
    assert out.solved
    assert out.iterations_to_first_solution == 0
    assert out.iterations_run == 0
    assert not out.tree.root.children


def test_plan_one_step(tiny_domain):
    out = plan(tiny_domain.item("AB"), tiny_domain.stock, tiny_domain,
               ConstantScorer(0.5), SearchParams(iteration_limit=500), random.Random(0))
    assert out.solved
    assert out.iterations_to_first_solution == 1


def test_plan_unsolvable_root(tiny_domain):
    out = plan(tiny_domain.item("QQ"), tiny_domain.stock, tiny_domain,
               ConstantScorer(0.5), SearchParams(iteration_limit=500), random.Random(0))
    assert not out.solved
    assert out.iterations_run == 1
    assert out.tree.root.status is Status.FAILURE


def test_plan_oracle_call_count_equals_iterations():
    domain = random_domain(seed=2, n_level1=10, n_level2=10, n_level3=10)
    target = generate_instances(domain, 1, (3, 7), seed=0)[0][0]
    calls = [0]
    real_expand = domain.expand

    def counting_expand(item, cfg):
        calls[0] += 1
        return real_expand(item, cfg)

    domain.expand = counting_expand
    out = plan(target, domain.stock, domain, ConstantScorer(0.5),
               SearchParams(iteration_limit=200, k=10), random.Random(1))
    assert calls[0] == out.iterations_run


def test_plan_replay_deterministic():
    domain = random_domain(seed=6, n_level1=12, n_level2=15, n_level3=15)
    target = generate_instances(domain, 1, (4, 7), seed=1)[0][0]
    params = SearchParams(iteration_limit=300, k=10)

    def run():
        out = plan(target, domain.stock, domain, ConstantScorer(0.5), params,
                   random.Random(99))
        route = extract_route(out.tree) if out.solved else None
        return (out.solved, out.iterations_to_first_solution, out.iterations_run,
                out.expanded_reaction_nodes, out.expanded_molecule_nodes,
                None if route is None else [(s.product.id, s.template_id) for s in route.steps])

    assert run() == run()


def test_plan_qbar_bounded_by_z():
    domain = random_domain(seed=8, n_level1=10, n_level2=12, n_level3=12)
    target = generate_instances(domain, 1, (4, 7), seed=3)[0][0]
    params = SearchParams(iteration_limit=200, k=10, z=10.0)
    out = plan(target, domain.stock, domain, ConstantScorer(0.5), params, random.Random(3))
    stack = [out.tree.root]
    while stack:
        node = stack.pop()
        for r in node.children:
            assert -10.0 <= r.q_bar <= 10.0
            stack.extend(r.children)


def test_plan_solved_routes_validate_and_bound():
    domain = random_domain(seed=12, n_level1=15, n_level2=20, n_level3=20)
    for target, optimum in generate_instances(domain, 25, (2, 7), seed=4):
        out = plan_eg_mcts_0(target, domain.stock, domain,
                             SearchParams(iteration_limit=500, k=10), random.Random(11))
        assert out.solved
        route = extract_route(out.tree)
        assert validate_route(route, domain.stock)
        assert len(route) >= optimum


def test_plan_keeps_searching_without_stop_on_first():
    # two independent good decompositions: the second is still open when the
    # first solves the root, so the search must keep going
    rules = [
        Rule("CDEF", ("CD", "EF"), 0.5),
        Rule("CDEF", ("GH", "EF"), 0.5),
        Rule("CD", ("C", "D"), 1.0),
        Rule("EF", ("E", "F"), 1.0),
        Rule("GH", ("G", "H"), 1.0),
    ]
    domain = SyntheticDomain(rules, StockSet(["C", "D", "E", "F", "G", "H"]))
    params = SearchParams(iteration_limit=50, k=10, stop_on_first_solution=False)
    out = plan(domain.item("CDEF"), domain.stock, domain,
               ConstantScorer(0.5), params, random.Random(0))
    assert out.solved
    # keeps running after the first solution until the frontier is exhausted
    assert out.iterations_run > out.iterations_to_first_solution
    stop_params = SearchParams(iteration_limit=50, k=10, stop_on_first_solution=True)
    stopped = plan(domain.item("CDEF"), domain.stock, domain,
                   ConstantScorer(0.5), stop_params, random.Random(0))
    assert stopped.iterations_run == stopped.iterations_to_first_solution


def test_plan_oracle_unavailable_attaches_partial(tiny_domain):
    class FlakyOracle:
        def __init__(self, inner):
            self.inner = inner
            self.calls = 0

        def item(self, i):
            return self.inner.item(i)

        def expand(self, item, cfg):
            self.calls += 1
            if self.calls >= 2:
                raise OracleUnavailable("connection dropped")
            return self.inner.expand(item, cfg)

    oracle = FlakyOracle(tiny_domain)
    with pytest.raises(OracleUnavailable) as exc_info:
        plan(tiny_domain.item("ABAB"), tiny_domain.stock, oracle,
             ConstantScorer(0.5), SearchParams(iteration_limit=10), random.Random(0))
    partial = exc_info.value.partial_outcome
    assert isinstance(partial, PlanOutcome)
    assert partial.iterations_run == 2
    assert not partial.solved


def test_params_validation():
    with pytest.raises(ValueError):
        SearchParams(c=0.0)
    with pytest.raises(ValueError):
        SearchParams(z=1.0)
    with pytest.raises(ValueError):
        SearchParams(iteration_limit=0)


def test_outcome_invariant():
    with pytest.raises(ValueError):
        PlanOutcome(target_id="x", solved=True, iterations_to_first_solution=None,
                    iterations_run=3, expanded_reaction_nodes=0, expanded_molecule_nodes=1)
