"""Deterministic, platform-independent RNG streams.

Every stochastic operation draws from a stream addressed by (seed, *key).
Identical addresses yield identical draws regardless of evaluation order or
parallelism degree, which keeps population-level concurrency reproducible.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_ints(key: tuple) -> tuple[int, ...]:
    out = []
    for part in key:
        if isinstance(part, (int, np.integer)):
            out.append(int(part) & 0xFFFFFFFF)
        else:
            out.append(zlib.crc32(str(part).encode("utf-8")))
    return tuple(out)


def stream(seed: int, *key) -> np.random.Generator:
    """A fresh generator for the stream addressed by (seed, *key)."""
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                 spawn_key=_key_to_ints(key))
    return np.random.Generator(np.random.PCG64(seq))


def genome_fingerprint(text: str) -> int:
    """Stable 32-bit fingerprint of a canonical genome text."""
    return zlib.crc32(text.encode("utf-8"))
