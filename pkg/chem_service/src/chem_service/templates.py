"""Retrosynthetic rewrite templates: atom-mapped pattern pairs applied to a
molecule by subgraph matching.

A template reads ``product_pattern>>reactant_pattern[.reactant_pattern...]``
with atom maps, e.g. ester hydrolysis in the retro direction:

    [C:1](=[O:2])O[C:3]>>[C:1](=[O:2])O.[C:3]O

Application: match the product side in the molecule; delete the product-side
bonds between mapped atoms; re-add the reactant-side bonds; new (unmapped)
reactant atoms are created.  The connected components of the rewritten graph
are the reactants.  Every product-side atom must be mapped and appear on the
reactant side, so no molecule atom can silently vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canon import canonical_smiles
from .fingerprint import reaction_fingerprint
from .match import find_embeddings
from .mol import Atom, Mol, SmilesError, parse_smiles


class TemplateError(ValueError):
    """Raised for template strings outside the supported rewrite language."""


@dataclass(frozen=True)
class Template:
    template_id: str
    pattern: str
    product_side: Mol
    reactant_side: Mol

    @property
    def fingerprint(self) -> bytes:
        sides = [self.reactant_side.subgraph(c) for c in self.reactant_side.components()]
        return reaction_fingerprint(self.product_side, sides)


def parse_template(template_id: str, pattern: str) -> Template:
    if ">>" not in pattern:
        raise TemplateError(f"{template_id}: pattern needs '>>'")
    product_text, reactant_text = pattern.split(">>", 1)
    try:
        product_side = parse_smiles(product_text)
        reactant_side = parse_smiles(reactant_text)
    except SmilesError as exc:
        raise TemplateError(f"{template_id}: {exc}") from exc
    if len(product_side.components()) != 1:
        raise TemplateError(f"{template_id}: product side must be one fragment")
    product_maps = [a.atom_map for a in product_side.atoms]
    if 0 in product_maps:
        raise TemplateError(f"{template_id}: every product-side atom needs a map")
    if len(set(product_maps)) != len(product_maps):
        raise TemplateError(f"{template_id}: duplicate atom maps on product side")
    reactant_maps = [a.atom_map for a in reactant_side.atoms if a.atom_map]
    if len(set(reactant_maps)) != len(reactant_maps):
        raise TemplateError(f"{template_id}: duplicate atom maps on reactant side")
    if set(product_maps) != set(reactant_maps):
        raise TemplateError(
            f"{template_id}: product and reactant maps must cover the same atoms")
    return Template(template_id=template_id, pattern=pattern,
                    product_side=product_side, reactant_side=reactant_side)


def apply_template(template: Template, mol: Mol) -> list[tuple[str, ...]]:
    """All distinct reactant sets (tuples of canonical SMILES) from applying
    the template to the molecule.  Results regenerating the input molecule
    are dropped."""
    mol_canonical = canonical_smiles(mol)
    product = template.product_side
    results: list[tuple[str, ...]] = []
    seen: set[tuple[str, ...]] = set()
    for embedding in find_embeddings(product, mol):
        rewritten = _rewrite(template, mol, embedding)
        if rewritten is None:
            continue
        try:
            parts = tuple(sorted(
                canonical_smiles(rewritten.subgraph(comp))
                for comp in rewritten.components()
            ))
        except SmilesError:
            continue
        if not parts or parts in seen or mol_canonical in parts:
            continue
        seen.add(parts)
        results.append(parts)
    return results


def _rewrite(template: Template, mol: Mol, embedding: dict[int, int]) -> Mol | None:
    out = Mol()
    for a in mol.atoms:
        out.add_atom(Atom(a.element, a.aromatic, a.charge, a.explicit_h))
    for (i, j), order in mol.bonds.items():
        out.add_bond(i, j, order)

    product = template.product_side
    reactants = template.reactant_side
    map_to_mol = {product.atoms[p].atom_map: m for p, m in embedding.items()}

    # drop the matched product-side bonds
    for (pi, pj), _order in product.bonds.items():
        mi, mj = embedding[pi], embedding[pj]
        key = (mi, mj) if mi < mj else (mj, mi)
        out.bonds.pop(key, None)
    out._adj = None

    # instantiate reactant-side atoms: mapped ones reuse the molecule atom
    # (adopting the pattern's charge), unmapped ones are new
    r_to_out: dict[int, int] = {}
    for r, atom in enumerate(reactants.atoms):
        if atom.atom_map:
            target = map_to_mol[atom.atom_map]
            r_to_out[r] = target
            out.atoms[target].charge = atom.charge
            out.atoms[target].explicit_h = None  # hydrogens refill by valence
        else:
            r_to_out[r] = out.add_atom(Atom(atom.element, atom.aromatic,
                                            atom.charge, atom.explicit_h))
    for (ri, rj), order in reactants.bonds.items():
        a, b = r_to_out[ri], r_to_out[rj]
        key = (a, b) if a < b else (b, a)
        if key in out.bonds:
            return None  # rewrite collides with an untouched molecule bond
        out.add_bond(a, b, order)
    return out
