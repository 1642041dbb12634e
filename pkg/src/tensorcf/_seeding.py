"""Labeled RNG stream derivation.

Every random draw in the package comes from a generator derived from a
master seed plus a tuple of labels, so that re-running any single stage
(or any single BFS root) reproduces the same numbers regardless of what
ran before it.
"""
from __future__ import annotations

import zlib

import numpy as np


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    return zlib.crc32(str(label).encode("utf-8"))


def derive_rng(seed: int, *labels) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_label_key(x) for x in labels))
    return np.random.default_rng(seq)


def derive_seed(seed: int, *labels) -> int:
    """Integer child seed, for handing to code that takes a plain seed."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_label_key(x) for x in labels))
    return int(seq.generate_state(1, dtype=np.uint32)[0])
