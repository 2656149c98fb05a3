"""Core problem types: items, template actions, stock sets, oracle contract."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Protocol, runtime_checkable

from .fingerprints import FP_BYTES


@dataclass(frozen=True, eq=False)
class Item:
    """A unit being decomposed: canonical id plus a carried 2048-bit fingerprint.

    Equality and hashing use the id only; the fingerprint is data, not identity.
    """

    id: str
    fingerprint: bytes

    def __post_init__(self):
        if not self.id:
            raise ValueError("item id must be non-empty")
        if len(self.fingerprint) != FP_BYTES:
            raise ValueError(f"item fingerprint must be {FP_BYTES} bytes")

    def __eq__(self, other):
        if isinstance(other, Item):
            return self.id == other.id
        return NotImplemented

    def __hash__(self):
        return hash(self.id)

    def __repr__(self):
        return f"Item({self.id!r})"


@dataclass(frozen=True)
class TemplateAction:
    """One concrete decomposition: a template applied to a product, with its reactants.

    A template yielding several distinct reactant sets for one product is
    emitted as several actions sharing the probability.
    """

    template_id: str
    fingerprint: bytes
    probability: float
    reactants: tuple[Item, ...]

    def __post_init__(self):
        if len(self.fingerprint) != FP_BYTES:
            raise ValueError(f"template fingerprint must be {FP_BYTES} bytes")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {self.probability}")
        if not self.reactants:
            raise ValueError("an action must have at least one reactant")

    def reactant_key(self) -> str:
        """Canonical key for the reactant multiset (for deduplication)."""
        return "|".join(sorted(r.id for r in self.reactants))


class StockSet:
    """Set of primitive item ids; membership is deterministic and side-effect free."""

    __slots__ = ("ids",)

    def __init__(self, ids: Iterable[str]):
        self.ids = frozenset(ids)

    def __contains__(self, item) -> bool:
        if isinstance(item, Item):
            return item.id in self.ids
        return item in self.ids

    def __len__(self) -> int:
        return len(self.ids)

    def __repr__(self):
        return f"StockSet({len(self.ids)} items)"


@dataclass(frozen=True)
class OracleConfig:
    """Expansion settings.  k is the top-k cap on returned actions.

    The default of 50 follows the prior single-step work this engine plugs
    into; it is a config value, not a verified constant.
    """

    k: int = 50

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@runtime_checkable
class ExpansionOracle(Protocol):
    """Contract for single-step expansion: top-k scored decompositions of an item."""

    def expand(self, item: Item, cfg: OracleConfig) -> list[TemplateAction]:
        """Actions sorted by probability descending, at most cfg.k, possibly empty."""
        ...

    def item(self, item_id: str) -> Item:
        """Builds the Item (id + fingerprint) for a raw id."""
        ...


@runtime_checkable
class Stock(Protocol):
    """Anything answering membership queries for item ids."""

    def __contains__(self, item) -> bool: ...


def check_action_product(action: TemplateAction, product_id: str) -> None:
    """Validates that no reactant regenerates the product it came from."""
    for r in action.reactants:
        if r.id == product_id:
            raise ValueError(
                f"action {action.template_id} lists its own product {product_id!r} as a reactant"
            )
