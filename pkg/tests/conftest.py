import pytest

from egmcts.fingerprints import text_fingerprint
from egmcts.items import Item, StockSet, TemplateAction
from egmcts.synthetic import Rule, SyntheticDomain


def mk_item(item_id: str) -> Item:
    return Item(item_id, text_fingerprint(item_id))


def mk_action(template_id: str, reactant_ids, probability: float = 0.5) -> TemplateAction:
    return TemplateAction(
        template_id=template_id,
        fingerprint=text_fingerprint(template_id, salt="tmpl"),
        probability=probability,
        reactants=tuple(mk_item(r) for r in reactant_ids),
    )


@pytest.fixture
def tiny_domain() -> SyntheticDomain:
    """AB -> A + B over stock {A, B}; plus a dead-end item."""
    rules = [
        Rule("AB", ("A", "B"), 1.0),
        Rule("ABAB", ("AB", "AB"), 1.0),
    ]
    return SyntheticDomain(rules, StockSet(["A", "B"]), seed=0)


@pytest.fixture
def layered_domain() -> SyntheticDomain:
    """Three levels with one trap branch per composite."""
    rules = [
        Rule("CD", ("C", "D"), 0.6),
        Rule("CD", ("x",), 0.9),
        Rule("EF", ("E", "F"), 0.5),
        Rule("CDEF", ("CD", "EF"), 0.7),
        Rule("CDEF", ("yy", "C"), 0.8),
        Rule("yy", ("y",), 1.0),
    ]
    return SyntheticDomain(rules, StockSet(["C", "D", "E", "F"]), seed=0)
