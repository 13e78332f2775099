"""Counter-based randomness.

Every random decision in this package is a pure function of a seed and the
identity of the record it concerns (hash-keyed, not drawn from a sequential
stream).  Two runs with the same seed therefore agree decision-for-decision
regardless of processing order, chunking, or thread count.
"""

from __future__ import annotations

import hashlib
import struct

_MASK64 = (1 << 64) - 1
_SEP = b"\x1f"


def _digest64(seed: int, parts: tuple) -> int:
    key = struct.pack("<Q", seed & _MASK64)
    h = hashlib.blake2b(digest_size=8, key=key)
    h.update(_SEP.join(str(p).encode("utf-8") for p in parts))
    return int.from_bytes(h.digest(), "little")


def unit_uniform(seed: int, *parts: object) -> float:
    """Deterministic uniform draw in [0, 1) keyed by (seed, *parts)."""
    return _digest64(seed, parts) / 2.0**64


def derived_seed(seed: int, *parts: object) -> int:
    """Derive an independent 63-bit seed for a named sub-stream."""
    return _digest64(seed, parts) >> 1
