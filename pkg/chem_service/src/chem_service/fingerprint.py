"""Circular (neighborhood-hashing) fingerprints folded to 2048 bits.

Each atom's environment at radius 0, 1, and 2 is hashed into the bit space;
packing matches the wire protocol: bit i lives in byte i // 8, most
significant bit first.  Hashes go through blake2b so the bits are stable
across processes and platforms.
"""

from __future__ import annotations

import hashlib

from .mol import Mol

FP_BITS = 2048
FP_BYTES = FP_BITS // 8
RADIUS = 2


def _h64(payload: str) -> int:
    digest = hashlib.blake2b(payload.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _atom_invariant(mol: Mol, i: int) -> int:
    a = mol.atoms[i]
    return _h64(f"a|{a.element}|{int(a.aromatic)}|{a.charge}|{mol.total_h(i)}|{mol.degree(i)}")


def environment_hashes(mol: Mol, radius: int = RADIUS) -> list[int]:
    """All atom-environment hashes up to the radius (with duplicates)."""
    current = {i: _atom_invariant(mol, i) for i in range(len(mol.atoms))}
    out = list(current.values())
    for r in range(1, radius + 1):
        nxt = {}
        for i in range(len(mol.atoms)):
            neighborhood = sorted((order, current[nb]) for nb, order in mol.neighbors(i))
            nxt[i] = _h64(f"e|{r}|{current[i]}|{neighborhood}")
        out.extend(nxt.values())
        current = nxt
    return out


def fold_bits(hashes, salt: str = "") -> bytes:
    buf = bytearray(FP_BYTES)
    for h in hashes:
        idx = _h64(f"f|{salt}|{h}") % FP_BITS
        buf[idx >> 3] |= 0x80 >> (idx & 7)
    return bytes(buf)


def molecule_fingerprint(mol: Mol) -> bytes:
    """2048-bit circular fingerprint, radius 2."""
    return fold_bits(environment_hashes(mol))


def reaction_fingerprint(product_side: Mol, reactant_sides: list[Mol]) -> bytes:
    """Structural fingerprint of a rewrite template: product-side and
    reactant-side environments folded together under side salts."""
    buf = bytearray(FP_BYTES)
    for salt, side in [("P", product_side)] + [("R", m) for m in reactant_sides]:
        for h in environment_hashes(side):
            idx = _h64(f"f|{salt}|{h}") % FP_BITS
            buf[idx >> 3] |= 0x80 >> (idx & 7)
    return bytes(buf)
