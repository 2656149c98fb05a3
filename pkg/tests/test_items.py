import pytest

from conftest import mk_action, mk_item
from egmcts.fingerprints import text_fingerprint
from egmcts.items import (Item, OracleConfig, StockSet, TemplateAction,
                          check_action_product)


def test_item_identity_is_id_only():
    a = Item("X", text_fingerprint("X"))
    b = Item("X", text_fingerprint("Y"))  # different carried fingerprint
    assert a == b
    assert hash(a) == hash(b)
    assert a != Item("Y", text_fingerprint("X"))


def test_item_validation():
    with pytest.raises(ValueError):
        Item("", text_fingerprint("X"))
    with pytest.raises(ValueError):
        Item("X", b"\x00" * 10)


def test_action_validation():
    with pytest.raises(ValueError):
        mk_action("t", ["A"], probability=1.5)
    with pytest.raises(ValueError):
        mk_action("t", [])
    with pytest.raises(ValueError):
        TemplateAction("t", b"\x00" * 3, 0.5, (mk_item("A"),))


def test_action_reactant_key_sorted():
    action = mk_action("t", ["B", "A", "B"])
    assert action.reactant_key() == "A|B|B"


def test_check_action_product():
    action = mk_action("t", ["A", "B"])
    check_action_product(action, "AB")
    with pytest.raises(ValueError):
        check_action_product(action, "A")


def test_stock_set_membership():
    stock = StockSet(["A", "B"])
    assert "A" in stock
    assert mk_item("B") in stock
    assert "C" not in stock
    assert mk_item("C") not in stock
    assert len(stock) == 2


def test_oracle_config_validation():
    assert OracleConfig().k == 50
    with pytest.raises(ValueError):
        OracleConfig(k=0)
