"""Fixed-length bit fingerprints and the network input encoding.

Fingerprints are 2048-bit vectors packed into 256 bytes.  Bit ``i`` lives in
byte ``i // 8`` with the most significant bit first, which matches
``numpy.unpackbits`` defaults and is the normative packing for the remote
oracle wire protocol (``fp_b64`` fields).
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import LengthMismatch

FP_BITS = 2048
FP_BYTES = FP_BITS // 8

# Popcount of every byte value, for Tanimoto arithmetic on packed vectors.
_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def fp_from_indices(indices) -> bytes:
    """Packs a collection of bit indices (0..2047) into a 256-byte fingerprint."""
    buf = bytearray(FP_BYTES)
    for i in indices:
        if not 0 <= i < FP_BITS:
            raise ValueError(f"bit index {i} out of range")
        buf[i >> 3] |= 0x80 >> (i & 7)
    return bytes(buf)


def fp_indices(fp: bytes) -> np.ndarray:
    """Returns the sorted indices of set bits in a packed fingerprint."""
    _check(fp)
    return np.flatnonzero(np.unpackbits(np.frombuffer(fp, dtype=np.uint8)))


def fp_to_floats(fp: bytes) -> np.ndarray:
    """Unpacks a fingerprint into a float64 0.0/1.0 vector of length 2048."""
    _check(fp)
    return np.unpackbits(np.frombuffer(fp, dtype=np.uint8)).astype(np.float64)


def text_fingerprint(text: str, salt: str = "") -> bytes:
    """Deterministic fingerprint of a string via hashed character n-grams.

    Overlapping 1..3-grams are hashed into the 2048-bit space, so strings
    sharing substrings share bits.  Used by the synthetic domain for both
    item and template fingerprints (with distinct salts).
    """
    if not text:
        raise ValueError("cannot fingerprint an empty string")
    indices = []
    for n in (1, 2, 3):
        for i in range(len(text) - n + 1):
            key = f"{salt}|{n}|{text[i:i + n]}".encode()
            h = hashlib.blake2b(key, digest_size=8).digest()
            indices.append(int.from_bytes(h, "big") % FP_BITS)
    return fp_from_indices(indices)


def make_egn_input(mol_fp: bytes, tmpl_fp: bytes) -> np.ndarray:
    """Concatenates molecule and template fingerprints into the 4096-float input.

    Molecule bits occupy indices 0..2047, template bits 2048..4095.
    """
    _check(mol_fp, "molecule fingerprint")
    _check(tmpl_fp, "template fingerprint")
    out = np.empty(2 * FP_BITS, dtype=np.float64)
    out[:FP_BITS] = fp_to_floats(mol_fp)
    out[FP_BITS:] = fp_to_floats(tmpl_fp)
    return out


def tanimoto(a: bytes, b: bytes) -> float:
    """Tanimoto similarity |a AND b| / |a OR b| of two packed fingerprints.

    Returns 0.0 when both fingerprints are empty (field convention).
    """
    _check(a)
    _check(b)
    av = np.frombuffer(a, dtype=np.uint8)
    bv = np.frombuffer(b, dtype=np.uint8)
    inter = int(_POPCOUNT[av & bv].sum())
    union = int(_POPCOUNT[av | bv].sum())
    if union == 0:
        return 0.0
    return inter / union


def tanimoto_matrix(test_fps: list[bytes], train_fps: list[bytes]) -> np.ndarray:
    """Pairwise Tanimoto similarities, one row per test fingerprint."""
    for fp in test_fps:
        _check(fp)
    for fp in train_fps:
        _check(fp)
    a = np.frombuffer(b"".join(test_fps), dtype=np.uint8).reshape(len(test_fps), FP_BYTES)
    b = np.frombuffer(b"".join(train_fps), dtype=np.uint8).reshape(len(train_fps), FP_BYTES)
    out = np.empty((len(test_fps), len(train_fps)), dtype=np.float64)
    b_pop = _POPCOUNT[b].sum(axis=1)
    for i in range(len(test_fps)):
        inter = _POPCOUNT[a[i] & b].sum(axis=1)
        union = _POPCOUNT[a[i]].sum() + b_pop - inter
        with np.errstate(invalid="ignore"):
            row = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
        out[i] = row
    return out


def _check(fp: bytes, what: str = "fingerprint") -> None:
    if not isinstance(fp, (bytes, bytearray)):
        raise LengthMismatch(f"{what} must be bytes, got {type(fp).__name__}")
    if len(fp) != FP_BYTES:
        raise LengthMismatch(f"{what} must be {FP_BYTES} bytes ({FP_BITS} bits), got {len(fp)}")
