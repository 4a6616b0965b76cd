"""Seedable, portable random streams.

Every random draw in the package comes from a PCG64 generator keyed by a
64-bit seed derived with SHA-256 from a base seed and a label path, e.g.
``stream(base, "split", trial)``. The derivation is:

    digest = SHA-256( b"sigdistill.rng.v1"
                      || uint64_le(base_seed)
                      || encode(part_0) || encode(part_1) || ... )
    seed   = first 8 digest bytes, little-endian

where ``encode`` prefixes a kind byte (``b"i"`` for integers, ``b"s"`` for
strings) followed by uint64_le(value) or uint32_le(len) + UTF-8 bytes.
Distinct label paths therefore give independent streams, and any
implementation with SHA-256 and PCG64 can reproduce them.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

_TAG = b"sigdistill.rng.v1"
_MASK64 = (1 << 64) - 1


def derive_seed(base_seed: int, *path: int | str) -> int:
    """Derive the 64-bit seed for the stream identified by ``path``."""
    h = hashlib.sha256()
    h.update(_TAG)
    h.update(struct.pack("<Q", base_seed & _MASK64))
    for part in path:
        if isinstance(part, bool) or not isinstance(part, (int, str)):
            raise TypeError(f"stream path parts must be int or str, got {part!r}")
        if isinstance(part, int):
            h.update(b"i" + struct.pack("<Q", part & _MASK64))
        else:
            raw = part.encode("utf-8")
            h.update(b"s" + struct.pack("<I", len(raw)) + raw)
    return int.from_bytes(h.digest()[:8], "little")


def stream(base_seed: int, *path: int | str) -> np.random.Generator:
    """Independent PCG64 generator for ``(base_seed, *path)``."""
    return np.random.Generator(np.random.PCG64(derive_seed(base_seed, *path)))
