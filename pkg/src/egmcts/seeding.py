"""Stable seed derivation so parallel runs stay replayable.

Python's builtin hash() is salted per process; everything here goes through
blake2b so (master seed, target id) always maps to the same child seed.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(master: int, *parts) -> int:
    """Derives a 64-bit seed from a master seed and any hashable string parts."""
    text = ":".join([str(master)] + [str(p) for p in parts])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_rng(master: int, *parts) -> random.Random:
    """A random.Random seeded from derive_seed."""
    return random.Random(derive_seed(master, *parts))
