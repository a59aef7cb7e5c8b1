"""Seeded 2-universal hashing of byte keys.

Keys are first reduced to a fixed 64-bit fingerprint (BLAKE2b, unkeyed), then
mapped through a seeded multiply-add-shift function

    h(x) = ((a * x + b) mod 2**128) >> 64

with 128-bit random ``a`` (odd) and ``b``.  This is Dietzfelbinger's
universal family for 64-bit inputs and 64-bit outputs.  Buckets are taken as
``h(x) mod m``; the modulo bias is below m / 2**64 and is ignored.
"""

from __future__ import annotations

import hashlib
import random
from typing import Union

import numpy as np

Key = Union[bytes, str]

_MASK64 = (1 << 64) - 1
_MASK128 = (1 << 128) - 1


def as_key(key: Key) -> bytes:
    """Normalise a key to non-empty bytes (str keys are UTF-8 encoded)."""
    if isinstance(key, str):
        key = key.encode("utf-8")
    elif not isinstance(key, (bytes, bytearray, memoryview)):
        raise TypeError(f"element key must be bytes or str, not {type(key).__name__}")
    key = bytes(key)
    if not key:
        raise ValueError("element key must be non-empty")
    return key


def fingerprint(key: Key) -> int:
    """Unseeded 64-bit fingerprint of a key."""
    digest = hashlib.blake2b(as_key(key), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seeds(master_seed: int, count: int, *path: int) -> list[int]:
    """Derive ``count`` independent 64-bit seeds from a master seed.

    ``path`` lets callers carve out reproducible sub-streams, e.g.
    ``derive_seeds(seed, d, trial, repetition)``.
    """
    seq = np.random.SeedSequence([int(master_seed) & _MASK64, *[int(p) for p in path]])
    return [int(s) for s in seq.generate_state(count, dtype=np.uint64)]


class RowHasher:
    """One member of the multiply-add-shift family, fixed by ``seed``."""

    __slots__ = ("seed", "a", "b", "_limbs")

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        rng = random.Random(self.seed)
        self.a = rng.getrandbits(128) | 1
        self.b = rng.getrandbits(128)
        self._limbs = tuple(
            np.uint64(v)
            for v in (self.a & _MASK64, self.a >> 64, self.b & _MASK64, self.b >> 64)
        )

    def __repr__(self):
        return f"RowHasher(seed={self.seed})"

    def hash_fingerprint(self, fp: int) -> int:
        return ((self.a * fp + self.b) & _MASK128) >> 64

    def hash(self, key: Key) -> int:
        """64-bit hash value of ``key``."""
        return self.hash_fingerprint(fingerprint(key))

    def bucket(self, key: Key, m: int) -> int:
        return hash_bucket(self, key, m)

    def hash_many(self, fingerprints) -> np.ndarray:
        """Hash a batch of fingerprints; returns a uint64 array.

        Same values as ``hash_fingerprint``, computed with 32-bit limbs so the
        128-bit product never leaves uint64 arithmetic.
        """
        x = np.asarray(fingerprints, dtype=np.uint64)
        a_lo, a_hi, b_lo, b_hi = self._limbs
        m32 = np.uint64(0xFFFFFFFF)
        s32 = np.uint64(32)
        x0, x1 = x & m32, x >> s32
        a0, a1 = a_lo & m32, a_lo >> s32
        p00, p01, p10, p11 = a0 * x0, a0 * x1, a1 * x0, a1 * x1
        mid = (p00 >> s32) + (p01 & m32) + (p10 & m32)
        hi = p11 + (p01 >> s32) + (p10 >> s32) + (mid >> s32)
        lo = (mid << s32) | (p00 & m32)
        lo_sum = lo + b_lo
        carry = (lo_sum < lo).astype(np.uint64)
        return hi + carry + a_hi * x + b_hi


def hash_bucket(hasher: RowHasher, key: Key, m: int) -> int:
    """Map ``key`` to a bucket in ``[0, m)`` under ``hasher``."""
    if m < 1:
        raise ValueError(f"bucket count must be >= 1, got {m}")
    return hasher.hash(key) % m
