"""Search-experience harvesting: one record per reaction node, deduplicated
into exact running means keyed by (molecule, template, reactant set)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .network import TrainingSample
from .tree import SearchTree


class ExperienceKey(NamedTuple):
    item_id: str
    template_id: str
    reactants_key: str


@dataclass(frozen=True)
class RawExperience:
    """One reaction node's final mean score, before deduplication."""

    key: ExperienceKey
    q_bar: float
    mol_fp: bytes
    tmpl_fp: bytes


@dataclass
class _Entry:
    observations: list[float]
    mol_fp: bytes
    tmpl_fp: bytes

    @property
    def mean(self) -> float:
        # fsum is exactly rounded, so the mean is independent of merge order.
        return math.fsum(self.observations) / len(self.observations)

    @property
    def occurrences(self) -> int:
        return len(self.observations)


class ExperienceSet:
    """Deduplicated (molecule, template) -> mean score training pairs."""

    def __init__(self, round_index: int = 0):
        self.round_index = round_index
        self.entries: dict[ExperienceKey, _Entry] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, raw: RawExperience) -> None:
        entry = self.entries.get(raw.key)
        if entry is None:
            self.entries[raw.key] = _Entry([raw.q_bar], raw.mol_fp, raw.tmpl_fp)
        else:
            entry.observations.append(raw.q_bar)

    def mean_of(self, key: ExperienceKey) -> float:
        return self.entries[key].mean

    def training_samples(self, clamp: bool = True) -> list[TrainingSample]:
        """Sorted, clamped pairs ready for network training.

        Scores driven by terminal rewards fall outside the network's (0, 1)
        codomain; clamping to [0, 1] preserves their ordering while making
        them representable targets.
        """
        out = []
        for key in sorted(self.entries):
            entry = self.entries[key]
            target = entry.mean
            if clamp:
                target = min(1.0, max(0.0, target))
            out.append(TrainingSample(entry.mol_fp, entry.tmpl_fp, target))
        return out

    def save(self, path) -> None:
        """Sorted newline-delimited records: key, mean, count."""
        lines = []
        for key in sorted(self.entries):
            entry = self.entries[key]
            lines.append(json.dumps({
                "item": key.item_id,
                "template": key.template_id,
                "reactants": key.reactants_key,
                "mean": entry.mean,
                "count": entry.occurrences,
            }, sort_keys=True))
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def collect_experience(tree: SearchTree) -> list[RawExperience]:
    """Every reaction node's (molecule, template) pair with its final q_bar.

    The same pair under different branches yields one record per node; the
    merge step averages them.
    """
    out: list[RawExperience] = []
    stack = [tree.root]
    while stack:
        mol = stack.pop()
        for reaction in mol.children:
            key = ExperienceKey(mol.item.id, reaction.action.template_id,
                                reaction.action.reactant_key())
            out.append(RawExperience(key=key, q_bar=reaction.q_bar,
                                     mol_fp=mol.item.fingerprint,
                                     tmpl_fp=reaction.action.fingerprint))
            stack.extend(reaction.children)
    return out


def merge_experience(raw: list[RawExperience], into: ExperienceSet) -> ExperienceSet:
    """Folds raw records into the set; duplicate keys merge to the exact mean."""
    for record in raw:
        into.add(record)
    return into
