"""Named, reproducible RNG sub-streams.

A master seed plus a path of labels (strings or ints) deterministically
identifies one stream. Parallel or reordered evaluation of independent
sub-streams therefore cannot change results.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_to_int(label) -> int:
    digest = hashlib.sha256(repr(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, *path) -> np.random.Generator:
    """Generator for the sub-stream named by ``path`` under ``seed``."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(_label_to_int(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(entropy))
