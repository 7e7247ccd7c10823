"""Seed-substream helpers shared by the statistical and experiment code."""

from __future__ import annotations

import numpy as np


def rng_at(seed: int, *path: int) -> np.random.Generator:
    """Deterministic generator for a (seed, index path) address.

    Counter-based splitting: every (repetition, permutation, ...) index
    gets its own independent stream, so results do not depend on execution
    order or worker count.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path)))
