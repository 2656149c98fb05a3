"""Minimal molecule model and SMILES subset parser.

Scope: organic-subset atoms plus bracket atoms with charge and explicit H,
single/double/triple/aromatic bonds, branches, ring closures (including %nn),
dot-separated fragments, and atom maps ([C:1]).  Stereochemistry markers are
accepted and dropped (the planner ignores them).  No aromaticity perception:
lowercase input stays aromatic, kekulized input stays kekulized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_OK = {"b", "c", "n", "o", "p", "s"}
# smallest-first standard valences for implicit hydrogen filling
DEFAULT_VALENCES = {
    "B": (3,), "C": (4,), "N": (3, 5), "O": (2,), "P": (3, 5),
    "S": (2, 4, 6), "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,),
}

AROMATIC_BOND = 1.5


class SmilesError(ValueError):
    """Raised for strings outside the supported SMILES subset."""


@dataclass
class Atom:
    element: str
    aromatic: bool = False
    charge: int = 0
    explicit_h: Optional[int] = None  # set for bracket atoms; None = implicit
    atom_map: int = 0


@dataclass
class Mol:
    atoms: list[Atom] = field(default_factory=list)
    bonds: dict[tuple[int, int], float] = field(default_factory=dict)
    _adj: Optional[dict[int, list[tuple[int, float]]]] = None

    def add_atom(self, atom: Atom) -> int:
        self.atoms.append(atom)
        self._adj = None
        return len(self.atoms) - 1

    def add_bond(self, i: int, j: int, order: float) -> None:
        if i == j:
            raise SmilesError("self-bond")
        key = (i, j) if i < j else (j, i)
        if key in self.bonds:
            raise SmilesError(f"duplicate bond {key}")
        self.bonds[key] = order
        self._adj = None

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        if self._adj is None:
            adj: dict[int, list[tuple[int, float]]] = {k: [] for k in range(len(self.atoms))}
            for (a, b), order in self.bonds.items():
                adj[a].append((b, order))
                adj[b].append((a, order))
            self._adj = adj
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def bond_order_sum(self, i: int) -> float:
        return sum(order for _, order in self.neighbors(i))

    def implicit_h(self, i: int) -> int:
        """Hydrogens filling the atom's lowest fitting standard valence.

        Bracket atoms carry exactly the hydrogens they were written with.
        Aromatic bonds count 1.5; the ceiling of the bond sum is used, which
        gives one H on a plain aromatic carbon in a six-ring and none on ring
        fusion atoms.
        """
        atom = self.atoms[i]
        if atom.explicit_h is not None:
            return atom.explicit_h
        valences = DEFAULT_VALENCES.get(atom.element)
        if valences is None:
            return 0
        import math
        used = math.ceil(self.bond_order_sum(i) - 1e-9)
        for v in valences:
            if used <= v:
                return v - used
        return 0

    def total_h(self, i: int) -> int:
        return self.implicit_h(i)

    def components(self) -> list[list[int]]:
        seen: set[int] = set()
        out = []
        for start in range(len(self.atoms)):
            if start in seen:
                continue
            comp = []
            stack = [start]
            seen.add(start)
            while stack:
                node = stack.pop()
                comp.append(node)
                for nb, _ in self.neighbors(node):
                    if nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            out.append(sorted(comp))
        return out

    def subgraph(self, atom_indices: list[int]) -> "Mol":
        remap = {old: new for new, old in enumerate(atom_indices)}
        out = Mol()
        for old in atom_indices:
            a = self.atoms[old]
            out.add_atom(Atom(a.element, a.aromatic, a.charge, a.explicit_h, a.atom_map))
        for (i, j), order in self.bonds.items():
            if i in remap and j in remap:
                out.add_bond(remap[i], remap[j], order)
        return out


_TWO_LETTER = ("Cl", "Br")
_BOND_CHARS = {"-": 1.0, "=": 2.0, "#": 3.0, ":": AROMATIC_BOND}


def parse_smiles(text: str) -> Mol:
    """Parses the supported SMILES subset into a Mol."""
    if not text or text != text.strip():
        raise SmilesError(f"empty or padded SMILES: {text!r}")
    mol = Mol()
    prev: Optional[int] = None
    pending_bond: Optional[float] = None
    branch_stack: list[Optional[int]] = []
    ring_open: dict[int, tuple[int, Optional[float]]] = {}
    i = 0
    n = len(text)

    def attach(idx: int) -> None:
        nonlocal prev, pending_bond
        if prev is None:
            if pending_bond is not None:
                raise SmilesError("bond symbol with no preceding atom")
        else:
            order = pending_bond
            if order is None:
                order = AROMATIC_BOND if (mol.atoms[prev].aromatic
                                          and mol.atoms[idx].aromatic) else 1.0
            mol.add_bond(prev, idx, order)
        pending_bond = None
        prev = idx

    def ring_closure(number: int) -> None:
        nonlocal pending_bond
        if prev is None:
            raise SmilesError("ring closure before any atom")
        if number in ring_open:
            partner, opening_bond = ring_open.pop(number)
            order = pending_bond if pending_bond is not None else opening_bond
            if order is None:
                order = AROMATIC_BOND if (mol.atoms[partner].aromatic
                                          and mol.atoms[prev].aromatic) else 1.0
            mol.add_bond(partner, prev, order)
        else:
            ring_open[number] = (prev, pending_bond)
        pending_bond = None

    while i < n:
        ch = text[i]
        if ch in _BOND_CHARS:
            if pending_bond is not None:
                raise SmilesError(f"two bond symbols in a row at {i}")
            pending_bond = _BOND_CHARS[ch]
            i += 1
        elif ch in "/\\":
            i += 1  # stereo bond direction: ignored
        elif ch == "(":
            if prev is None:
                raise SmilesError("branch before any atom")
            branch_stack.append(prev)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesError("unbalanced ')'")
            prev = branch_stack.pop()
            i += 1
        elif ch == ".":
            if pending_bond is not None:
                raise SmilesError("bond before '.'")
            prev = None
            i += 1
        elif ch.isdigit():
            ring_closure(int(ch))
            i += 1
        elif ch == "%":
            if i + 2 >= n or not text[i + 1:i + 3].isdigit():
                raise SmilesError(f"bad %nn ring closure at {i}")
            ring_closure(int(text[i + 1:i + 3]))
            i += 3
        elif ch == "[":
            end = text.find("]", i)
            if end == -1:
                raise SmilesError("unclosed bracket atom")
            idx = mol.add_atom(_parse_bracket(text[i + 1:end]))
            attach(idx)
            i = end + 1
        else:
            element = None
            if text[i:i + 2] in _TWO_LETTER:
                element = text[i:i + 2]
                i += 2
            elif ch.upper() in {e for e in ORGANIC_SUBSET if len(e) == 1}:
                element = ch
                i += 1
            else:
                raise SmilesError(f"unsupported character {ch!r} at {i}")
            aromatic = element.islower()
            if aromatic and element not in AROMATIC_OK:
                raise SmilesError(f"{element!r} cannot be aromatic")
            idx = mol.add_atom(Atom(element=element.capitalize(), aromatic=aromatic))
            attach(idx)
    if branch_stack:
        raise SmilesError("unbalanced '('")
    if ring_open:
        raise SmilesError(f"unclosed ring bonds: {sorted(ring_open)}")
    if pending_bond is not None:
        raise SmilesError("dangling bond symbol")
    _validate(mol)
    return mol


def _parse_bracket(body: str) -> Atom:
    i = 0
    n = len(body)
    while i < n and body[i].isdigit():
        i += 1  # isotope: accepted, dropped
    if i >= n:
        raise SmilesError(f"bracket atom without element: [{body}]")
    if body[i:i + 2] in _TWO_LETTER:
        element = body[i:i + 2]
        i += 2
    elif body[i].isalpha():
        element = body[i]
        i += 1
        if i < n and body[i].islower() and body[i] not in "h":
            element += body[i]
            i += 1
    else:
        raise SmilesError(f"bad bracket atom: [{body}]")
    aromatic = element[0].islower()
    if aromatic and element not in AROMATIC_OK:
        raise SmilesError(f"{element!r} cannot be aromatic")
    element = element.capitalize()
    while i < n and body[i] == "@":
        i += 1  # chirality: ignored
    explicit_h = 0
    if i < n and body[i] == "H":
        i += 1
        count = ""
        while i < n and body[i].isdigit():
            count += body[i]
            i += 1
        explicit_h = int(count) if count else 1
    charge = 0
    while i < n and body[i] in "+-":
        sign = 1 if body[i] == "+" else -1
        i += 1
        count = ""
        while i < n and body[i].isdigit():
            count += body[i]
            i += 1
        charge += sign * (int(count) if count else 1)
    atom_map = 0
    if i < n and body[i] == ":":
        i += 1
        count = ""
        while i < n and body[i].isdigit():
            count += body[i]
            i += 1
        if not count:
            raise SmilesError(f"bad atom map in [{body}]")
        atom_map = int(count)
    if i != n:
        raise SmilesError(f"trailing junk in bracket atom: [{body}]")
    return Atom(element=element, aromatic=aromatic, charge=charge,
                explicit_h=explicit_h, atom_map=atom_map)


def _validate(mol: Mol) -> None:
    for (i, j), order in mol.bonds.items():
        if order == AROMATIC_BOND:
            if not (mol.atoms[i].aromatic and mol.atoms[j].aromatic):
                raise SmilesError("aromatic bond between non-aromatic atoms")


def needs_brackets(mol: Mol, i: int) -> bool:
    atom = mol.atoms[i]
    if atom.element not in ORGANIC_SUBSET:
        return True
    if atom.charge != 0 or atom.atom_map:
        return True
    if atom.explicit_h is not None:
        # bracket H count must be preserved unless it coincides with the
        # organic-subset implicit fill
        shadow = Atom(atom.element, atom.aromatic, atom.charge, None)
        saved = mol.atoms[i]
        mol.atoms[i] = shadow
        try:
            return mol.implicit_h(i) != atom.explicit_h
        finally:
            mol.atoms[i] = saved
    return False


def atom_token(mol: Mol, i: int, with_maps: bool = False) -> str:
    atom = mol.atoms[i]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    if not needs_brackets(mol, i) and not (with_maps and atom.atom_map):
        return symbol
    parts = [symbol]
    h = atom.explicit_h if atom.explicit_h is not None else mol.implicit_h(i)
    if h == 1:
        parts.append("H")
    elif h > 1:
        parts.append(f"H{h}")
    if atom.charge:
        sign = "+" if atom.charge > 0 else "-"
        mag = abs(atom.charge)
        parts.append(sign if mag == 1 else f"{sign}{mag}")
    if with_maps and atom.atom_map:
        parts.append(f":{atom.atom_map}")
    return "[" + "".join(parts) + "]"
