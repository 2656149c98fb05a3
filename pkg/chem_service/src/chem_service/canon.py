"""Canonical atom ranking and canonical SMILES emission.

Ranking is iterative neighborhood refinement over atom invariants; remaining
ties are broken by individuating each tied atom in turn and keeping the
lexicographically smallest emission, so the result depends only on the graph,
never on input atom order.
"""

from __future__ import annotations

from .mol import AROMATIC_BOND, Mol, SmilesError, atom_token


def _initial_keys(mol: Mol, indices: list[int]) -> dict[int, tuple]:
    keys = {}
    for i in indices:
        a = mol.atoms[i]
        keys[i] = (a.element, a.aromatic, a.charge, mol.total_h(i),
                   mol.degree(i), mol.bond_order_sum(i))
    return keys


def _dense_ranks(keys: dict[int, tuple]) -> dict[int, int]:
    ordered = sorted(set(keys.values()))
    lookup = {k: r for r, k in enumerate(ordered)}
    return {i: lookup[k] for i, k in keys.items()}


def _refine(mol: Mol, ranks: dict[int, int]) -> dict[int, int]:
    indices = list(ranks)
    while True:
        keys = {
            i: (ranks[i], tuple(sorted((order, ranks[nb])
                                       for nb, order in mol.neighbors(i)
                                       if nb in ranks)))
            for i in indices
        }
        new = _dense_ranks(keys)
        if len(set(new.values())) == len(set(ranks.values())):
            return new
        ranks = new


def _canonical_component(mol: Mol, indices: list[int], with_maps: bool) -> str:
    ranks = _refine(mol, _dense_ranks(_initial_keys(mol, indices)))
    return _emit_best(mol, indices, ranks, with_maps)


def _emit_best(mol: Mol, indices: list[int], ranks: dict[int, int],
               with_maps: bool) -> str:
    classes: dict[int, list[int]] = {}
    for i in indices:
        classes.setdefault(ranks[i], []).append(i)
    tied = sorted(r for r, members in classes.items() if len(members) > 1)
    if not tied:
        return _emit(mol, indices, ranks, with_maps)
    # individuate each member of the lowest tied class; automorphic members
    # emit identical strings, so min() is a graph property
    members = classes[tied[0]]
    candidates = []
    for m in members:
        forced = dict(ranks)
        forced = {i: 2 * r for i, r in forced.items()}
        forced[m] -= 1
        candidates.append(_emit_best(mol, indices, _refine(mol, forced), with_maps))
    return min(candidates)


def _emit(mol: Mol, indices: list[int], ranks: dict[int, int],
          with_maps: bool) -> str:
    start = min(indices, key=lambda i: ranks[i])

    # pass 1: tree structure and ring closures in deterministic rank order
    visited: set[int] = set()
    tree_children: dict[int, list[int]] = {i: [] for i in indices}
    closure_open: dict[int, list[tuple[int, float, int]]] = {i: [] for i in indices}
    closure_close: dict[int, list[int]] = {i: [] for i in indices}
    consumed: set[tuple[int, int]] = set()
    counter = [0]

    def walk(u: int) -> None:
        visited.add(u)
        for v, order in sorted(mol.neighbors(u), key=lambda t: (ranks[t[0]], t[1])):
            key = (u, v) if u < v else (v, u)
            if key in consumed:
                continue
            consumed.add(key)
            if v not in visited:
                tree_children[u].append(v)
                walk(v)
            else:
                counter[0] += 1
                number = counter[0]
                closure_open[v].append((number, order, u))
                closure_close[u].append(number)

    walk(start)

    def bond_symbol(u: int, v: int, order: float) -> str:
        if order == 2.0:
            return "="
        if order == 3.0:
            return "#"
        if order == AROMATIC_BOND:
            return ""
        if mol.atoms[u].aromatic and mol.atoms[v].aromatic:
            return "-"  # explicit single between aromatic atoms
        return ""

    def ring_digit(number: int) -> str:
        return str(number) if number < 10 else f"%{number:02d}"

    def render(u: int, parent: int | None) -> str:
        out = [atom_token(mol, u, with_maps)]
        for number, order, partner in closure_open[u]:
            out.append(bond_symbol(u, partner, order) + ring_digit(number))
        for number in closure_close[u]:
            out.append(ring_digit(number))
        children = tree_children[u]
        for pos, v in enumerate(children):
            key = (u, v) if u < v else (v, u)
            text = bond_symbol(u, v, mol.bonds[key]) + render(v, u)
            if pos < len(children) - 1:
                out.append(f"({text})")
            else:
                out.append(text)
        return "".join(out)

    return render(start, None)


def canonical_smiles(mol: Mol, with_maps: bool = False) -> str:
    """Canonical string form; disconnected fragments are emitted sorted."""
    if not mol.atoms:
        raise SmilesError("cannot canonicalize an empty molecule")
    parts = [_canonical_component(mol, comp, with_maps) for comp in mol.components()]
    return ".".join(sorted(parts))


def canonicalize(text: str) -> str:
    """Parse + canonical emission; idempotent by construction."""
    from .mol import parse_smiles

    return canonical_smiles(parse_smiles(text))
