"""Synthetic rule-system domains: a deterministic, desk-scale expansion oracle.

Items are strings; a rule decomposes a product id into strictly shorter
reactant ids, so every decomposition terminates and no item is reachable from
itself.  Rule weights, normalized over the rules matching an item, play the
role of single-step probabilities.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .errors import GenerationExhausted
from .fingerprints import text_fingerprint
from .items import Item, OracleConfig, StockSet, TemplateAction
from .routes import brute_force_solve

DOMAIN_FILE_VERSION = 1
_TEMPLATE_SALT = "tmpl"


@dataclass(frozen=True)
class Rule:
    """product -> reactants rewrite with a sampling weight."""

    product: str
    reactants: tuple[str, ...]
    weight: float

    def __post_init__(self):
        if not self.reactants:
            raise ValueError("rule needs at least one reactant")
        if self.weight <= 0:
            raise ValueError("rule weight must be positive")
        for r in self.reactants:
            if len(r) >= len(self.product):
                raise ValueError(
                    f"reactant {r!r} is not shorter than product {self.product!r}; "
                    "rules must shrink items"
                )

    @property
    def template_id(self) -> str:
        return f"{self.product}>{'.'.join(self.reactants)}"


class SyntheticDomain:
    """A rule table plus a stock set; also serves as the expansion oracle."""

    def __init__(self, rules: Sequence[Rule], stock: StockSet, seed: int = 0):
        self.rules = tuple(rules)
        self.stock = stock
        self.seed = seed
        self._by_product: dict[str, list[Rule]] = {}
        for rule in self.rules:
            self._by_product.setdefault(rule.product, []).append(rule)
        self._items: dict[str, Item] = {}
        self._tmpl_fps: dict[str, bytes] = {}

    def item(self, item_id: str) -> Item:
        cached = self._items.get(item_id)
        if cached is None:
            cached = Item(item_id, text_fingerprint(item_id))
            self._items[item_id] = cached
        return cached

    def template_fingerprint(self, template_id: str) -> bytes:
        cached = self._tmpl_fps.get(template_id)
        if cached is None:
            cached = text_fingerprint(template_id, salt=_TEMPLATE_SALT)
            self._tmpl_fps[template_id] = cached
        return cached

    def expand(self, item: Item, cfg: OracleConfig) -> list[TemplateAction]:
        """Matched rules, weight-normalized, sorted by probability descending,
        truncated to cfg.k.  An item with no matching rule expands to []."""
        matched = self._by_product.get(item.id, [])
        if not matched:
            return []
        total = sum(r.weight for r in matched)
        scored = sorted(matched, key=lambda r: (-r.weight / total, r.template_id))
        actions = []
        for rule in scored[:cfg.k]:
            actions.append(TemplateAction(
                template_id=rule.template_id,
                fingerprint=self.template_fingerprint(rule.template_id),
                probability=rule.weight / total,
                reactants=tuple(self.item(r) for r in rule.reactants),
            ))
        return actions

    def composite_ids(self) -> list[str]:
        """Every id that appears as a rule product, in stable sorted order."""
        return sorted(self._by_product)

    def check_acyclic(self) -> bool:
        """DFS check that no item reaches itself via rules.  The length measure
        already guarantees this; the check exists for fixture sanity."""
        state: dict[str, int] = {}

        def visit(item_id: str) -> bool:
            mark = state.get(item_id, 0)
            if mark == 1:
                return False
            if mark == 2:
                return True
            state[item_id] = 1
            for rule in self._by_product.get(item_id, []):
                for r in rule.reactants:
                    if not visit(r):
                        return False
            state[item_id] = 2
            return True

        return all(visit(pid) for pid in self._by_product)

    def to_dict(self) -> dict:
        return {
            "version": DOMAIN_FILE_VERSION,
            "seed": self.seed,
            "stock": sorted(self.stock.ids),
            "rules": [
                {"product": r.product, "reactants": list(r.reactants), "weight": r.weight}
                for r in self.rules
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SyntheticDomain":
        if doc.get("version") != DOMAIN_FILE_VERSION:
            raise ValueError(f"unsupported domain file version: {doc.get('version')!r}")
        rules = [Rule(d["product"], tuple(d["reactants"]), d["weight"]) for d in doc["rules"]]
        return cls(rules, StockSet(doc["stock"]), seed=doc.get("seed", 0))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "SyntheticDomain":
        return cls.from_dict(json.loads(Path(path).read_text()))


def generate_instances(domain: SyntheticDomain, n: int,
                       difficulty: tuple[int, int],
                       seed: int = 0,
                       attempt_budget: Optional[int] = None) -> list[tuple[Item, int]]:
    """Draws n solvable targets whose certified optimal length falls in the
    difficulty window, certifying each with the brute-force oracle."""
    min_len, max_len = difficulty
    if max_len > 8:
        raise ValueError(f"max difficulty must be <= 8 (brute-force certifiable), got {max_len}")
    if min_len < 1 or min_len > max_len:
        raise ValueError(f"bad difficulty window {difficulty}")
    rng = random.Random(seed)
    candidates = domain.composite_ids()
    rng.shuffle(candidates)
    if attempt_budget is None:
        attempt_budget = max(len(candidates), 4 * n)
    out: list[tuple[Item, int]] = []
    attempts = 0
    for cid in candidates:
        if len(out) == n or attempts >= attempt_budget:
            break
        attempts += 1
        target = domain.item(cid)
        if target in domain.stock:
            continue
        optimum = brute_force_solve(target, domain.stock, domain, depth_cap=8)
        if optimum is not None and min_len <= optimum <= max_len:
            out.append((target, optimum))
    if len(out) < n:
        raise GenerationExhausted(
            f"only {len(out)}/{n} instances at difficulty {difficulty} "
            f"within {attempts} attempts"
        )
    return out


_STOCK_LETTERS = "ABCDEFGHIJKLMNOPQR"
_TRAP_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def random_domain(seed: int = 0,
                  n_level1: int = 50,
                  n_level2: int = 140,
                  n_level3: int = 160,
                  n_traps: int = 40,
                  trap_rules_per_item: tuple[int, int] = (1, 3),
                  misleading_traps: bool = True) -> SyntheticDomain:
    """Generates a layered domain with solvable composites and dead-end traps.

    Level-1 items decompose into stock letters, level-2 into level-1 pairs,
    level-3 into level-2 + level-1 (or two level-2).  Every composite also
    carries trap rules whose reactants are unsolvable lowercase chains shared
    across items, so searches that cannot tell good from bad waste work there.
    With misleading_traps, trap rules get boosted weights so that greedy,
    probability-first search is actively misled.
    """
    rng = random.Random(seed)
    stock = StockSet(_STOCK_LETTERS)
    rules: list[Rule] = []
    rule_keys: set[tuple[str, tuple[str, ...]]] = set()

    def add_rule(product: str, reactants: tuple[str, ...], w: float) -> None:
        key = (product, reactants)
        if key not in rule_keys:
            rule_keys.add(key)
            rules.append(Rule(product, reactants, w))

    # Shared pool of unsolvable trap chains (lowercase, never in stock).
    trap_heads: list[str] = []
    used_traps: set[str] = set()
    for _ in range(n_traps):
        depth = rng.randint(1, 3)
        length = depth + rng.randint(1, 2)
        chain = []
        while True:
            head = "".join(rng.choice(_TRAP_LETTERS) for _ in range(length))
            if head not in used_traps:
                break
        cur = head
        used_traps.add(cur)
        for _ in range(depth):
            nxt = cur[:-1] if len(cur) > 1 else None
            if nxt is None or nxt in used_traps:
                break
            add_rule(cur, (nxt,), rng.uniform(0.2, 1.0))
            used_traps.add(nxt)
            cur = nxt
        trap_heads.append(head)

    def weight(is_trap: bool) -> float:
        w = rng.uniform(0.2, 1.0)
        if is_trap and misleading_traps and rng.random() < 0.5:
            w *= 1.8
        return w

    def add_trap_rules(product: str) -> None:
        lo, hi = trap_rules_per_item
        for _ in range(rng.randint(lo, hi)):
            trap = rng.choice(trap_heads)
            trap = trap[: max(1, min(len(trap), len(product) - 1))]
            filler = rng.choice(_STOCK_LETTERS)
            reactants = (trap, filler) if rng.random() < 0.5 else (trap,)
            add_rule(product, reactants, weight(is_trap=True))

    def fresh_ids(count: int, make) -> list[str]:
        out: list[str] = []
        seen: set[str] = set()
        while len(out) < count:
            cand = make()
            if cand not in seen and cand not in stock.ids:
                seen.add(cand)
                out.append(cand)
        return out

    level1 = fresh_ids(n_level1, lambda: "".join(rng.sample(_STOCK_LETTERS, 2)))
    for pid in level1:
        add_rule(pid, tuple(pid), weight(is_trap=False))
        add_trap_rules(pid)

    level2 = fresh_ids(n_level2, lambda: "".join(rng.sample(level1, 2)))
    for pid in level2:
        add_rule(pid, (pid[:2], pid[2:]), weight(is_trap=False))
        if rng.random() < 0.3:
            # Alternate good decomposition through a different level-1 pair.
            alt = tuple(rng.sample(level1, 2))
            if "".join(alt) != pid:
                add_rule(pid, alt, weight(is_trap=False))
        add_trap_rules(pid)

    def make_level3() -> str:
        if rng.random() < 0.5:
            return rng.choice(level2) + rng.choice(level1)
        return "".join(rng.sample(level2, 2))

    # Both level-3 shapes split after the leading level-2 (4 characters).
    level3 = fresh_ids(n_level3, make_level3)
    for pid in level3:
        add_rule(pid, (pid[:4], pid[4:]), weight(is_trap=False))
        add_trap_rules(pid)

    return SyntheticDomain(rules, stock, seed=seed)


def benchmark_suite(seed: int,
                    n_train: int = 200,
                    n_validation: int = 30,
                    n_test: int = 50) -> tuple[SyntheticDomain, list[Item], list[Item], list[Item]]:
    """A seeded domain plus disjoint train/validation/test target sets drawn
    from its non-trivial composites."""
    domain = random_domain(seed=seed)
    total = n_train + n_validation + n_test
    instances = generate_instances(domain, total, (2, 8), seed=seed)
    targets = [item for item, _ in instances]
    train = targets[:n_train]
    validation = targets[n_train:n_train + n_validation]
    test = targets[n_train + n_validation:]
    return domain, train, validation, test
