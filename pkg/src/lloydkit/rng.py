"""Seeded random streams.

Every random draw in the package goes through :func:`make_rng`, which derives
an independent Philox stream from a master seed and a tuple of keys such as
``(replicate, "noise")``. Streams depend only on their keys, so running
replicates in any order or on any number of workers gives identical output.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"stream keys must be non-negative, got {key}")
        return int(key)
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    raise TypeError(f"unsupported stream key {key!r}")


def make_rng(seed: int, *keys) -> np.random.Generator:
    """Counter-based generator for the sub-stream named by ``keys``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_to_int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))


def as_generator(seed, *keys) -> np.random.Generator:
    """Accept either a seed or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(0 if seed is None else seed, *keys)
