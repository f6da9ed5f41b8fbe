"""Reproducible random-source derivation.

Every stochastic operation draws from a counter-based Philox generator keyed
by (master seed, operation tag, optional cell indices).  Derived streams are
statistically independent, so grid sweeps can run cells in any order or in
parallel and still reproduce bit-identical results for a given master seed.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["spawn_generator", "tag_word"]


def tag_word(part) -> int:
    """Map a path component (int or str) to a stable uint32 key word."""
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("seed path integers must be non-negative")
        return int(part) & 0xFFFFFFFF
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8")) & 0xFFFFFFFF
    raise TypeError(f"seed path components must be int or str, got {type(part)!r}")


def spawn_generator(master_seed: int, *path) -> np.random.Generator:
    """Derive an independent generator for (master_seed, *path).

    `path` components may be strings (operation tags) or non-negative ints
    (grid-cell or repetition indices).
    """
    key = tuple(tag_word(p) for p in path)
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
