"""Subgraph embedding search: find every mapping of a pattern molecule into a
target molecule (backtracking, VF2-flavored).

Pattern atoms match on element, aromatic flag, and charge; a bracket H count
in the pattern is a minimum requirement on the target atom's hydrogens.
Pattern bonds must exist in the target with the same order.
"""

from __future__ import annotations

from .mol import Mol

MAX_EMBEDDINGS = 64


def atom_compatible(pattern: Mol, p: int, mol: Mol, m: int) -> bool:
    pa = pattern.atoms[p]
    ma = mol.atoms[m]
    if pa.element != ma.element or pa.aromatic != ma.aromatic:
        return False
    if pa.charge != ma.charge:
        return False
    if pa.explicit_h is not None and mol.total_h(m) < pa.explicit_h:
        return False
    return mol.degree(m) >= pattern.degree(p)


def find_embeddings(pattern: Mol, mol: Mol,
                    limit: int = MAX_EMBEDDINGS) -> list[dict[int, int]]:
    """All pattern-atom -> molecule-atom mappings, up to the limit.

    The pattern is assumed connected; the search walks it in a connected
    order so each new atom is constrained by an already-mapped neighbor.
    """
    if not pattern.atoms or len(pattern.atoms) > len(mol.atoms):
        return []
    order = _connected_order(pattern)
    embeddings: list[dict[int, int]] = []
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def candidates(p: int):
        anchors = [(q, o) for q, o in pattern.neighbors(p) if q in mapping]
        if not anchors:
            return range(len(mol.atoms))
        q, order_pq = anchors[0]
        return [nb for nb, o in mol.neighbors(mapping[q]) if o == order_pq]

    def feasible(p: int, m: int) -> bool:
        if m in used or not atom_compatible(pattern, p, mol, m):
            return False
        for q, order_pq in pattern.neighbors(p):
            if q in mapping:
                key = (m, mapping[q]) if m < mapping[q] else (mapping[q], m)
                if mol.bonds.get(key) != order_pq:
                    return False
        return True

    def backtrack(pos: int) -> None:
        if len(embeddings) >= limit:
            return
        if pos == len(order):
            embeddings.append(dict(mapping))
            return
        p = order[pos]
        for m in candidates(p):
            if feasible(p, m):
                mapping[p] = m
                used.add(m)
                backtrack(pos + 1)
                used.discard(m)
                del mapping[p]

    backtrack(0)
    return embeddings


def _connected_order(pattern: Mol) -> list[int]:
    order = [0]
    seen = {0}
    frontier = [0]
    while frontier:
        u = frontier.pop(0)
        for v, _ in pattern.neighbors(u):
            if v not in seen:
                seen.add(v)
                order.append(v)
                frontier.append(v)
    if len(order) != len(pattern.atoms):
        raise ValueError("pattern must be a connected graph")
    return order
