import pytest
from hypothesis import given, strategies as st

from conftest import mk_action, mk_item
from egmcts.experience import (ExperienceKey, ExperienceSet, RawExperience,
                               collect_experience, merge_experience)
from egmcts.fingerprints import text_fingerprint
from egmcts.items import StockSet
from egmcts.tree import SearchTree


def raw(item_id, template_id, q, reactants="r"):
    return RawExperience(
        key=ExperienceKey(item_id, template_id, reactants),
        q_bar=q,
        mol_fp=text_fingerprint(item_id),
        tmpl_fp=text_fingerprint(template_id, salt="tmpl"),
    )


def test_collect_empty_tree_for_stock_target():
    tree = SearchTree(mk_item("S"), StockSet(["S"]))
    assert collect_experience(tree) == []


def test_collect_one_entry_per_reaction_node():
    tree = SearchTree(mk_item("X"), StockSet(["S"]))
    tree.attach_expansion(tree.root, [mk_action("t1", ["a"]), mk_action("t2", ["b"])],
                          [0.3, 0.7])
    (r1, r2) = tree.root.children
    tree.attach_expansion(r1.children[0], [mk_action("t3", ["S"])], [0.9])
    entries = collect_experience(tree)
    assert len(entries) == 3
    got = {(e.key.item_id, e.key.template_id): e.q_bar for e in entries}
    assert got[("X", "t1")] == 0.3
    assert got[("X", "t2")] == 0.7
    assert got[("a", "t3")] == 0.9


def test_collect_repeated_pair_across_branches():
    # the same item under two branches yields two nodes and two raw records
    tree = SearchTree(mk_item("X"), StockSet(["S"]))
    tree.attach_expansion(tree.root, [mk_action("t1", ["mm"]), mk_action("t2", ["mm"])],
                          [0.5, 0.5])
    (r1, r2) = tree.root.children
    tree.attach_expansion(r1.children[0], [mk_action("u", ["c"])], [0.4])
    tree.attach_expansion(r2.children[0], [mk_action("u", ["c"])], [0.6])
    entries = collect_experience(tree)
    dupes = [e for e in entries if e.key.template_id == "u"]
    assert len(dupes) == 2
    assert dupes[0].key == dupes[1].key
    merged = merge_experience(entries, ExperienceSet())
    key = dupes[0].key
    assert merged.mean_of(key) == pytest.approx(0.5)
    assert merged.entries[key].occurrences == 2


def test_merge_mean_and_occurrences():
    es = merge_experience([raw("m", "t", 0.4), raw("m", "t", 0.6)], ExperienceSet())
    key = ExperienceKey("m", "t", "r")
    assert es.mean_of(key) == 0.5
    assert es.entries[key].occurrences == 2


def test_merge_empty_is_identity():
    es = merge_experience([raw("m", "t", 0.4)], ExperienceSet())
    before = {k: (e.mean, e.occurrences) for k, e in es.entries.items()}
    merge_experience([], es)
    assert {k: (e.mean, e.occurrences) for k, e in es.entries.items()} == before


def test_merge_three_observations():
    es = merge_experience([raw("m", "t", 0.2), raw("m", "t", 0.4), raw("m", "t", 0.9)],
                          ExperienceSet())
    assert es.mean_of(ExperienceKey("m", "t", "r")) == 0.5


@given(st.lists(st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=1,
                max_size=30),
       st.randoms(use_true_random=False))
def test_merge_permutation_invariant(values, rng):
    records = [raw("m", "t", v) for v in values]
    shuffled = list(records)
    rng.shuffle(shuffled)
    a = merge_experience(records, ExperienceSet())
    b = merge_experience(shuffled, ExperienceSet())
    key = ExperienceKey("m", "t", "r")
    assert a.mean_of(key) == b.mean_of(key)  # fsum: exact, order-free


def test_training_samples_sorted_and_clamped():
    es = merge_experience([raw("b", "t", 5.25), raw("a", "t", -3.0), raw("c", "t", 0.5)],
                          ExperienceSet())
    samples = es.training_samples()
    assert [s.target for s in samples] == [0.0, 1.0, 0.5]
    raw_samples = es.training_samples(clamp=False)
    assert [s.target for s in raw_samples] == [-3.0, 5.25, 0.5]


def test_save_sorted_jsonl(tmp_path):
    es = merge_experience([raw("b", "t2", 0.4), raw("a", "t1", 0.6), raw("a", "t1", 0.8)],
                          ExperienceSet())
    path = tmp_path / "exp.jsonl"
    es.save(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert '"item": "a"' in lines[0]
    assert '"count": 2' in lines[0]
    assert '"mean": 0.7' in lines[0]
