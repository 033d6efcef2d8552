"""Deterministic RNG streams derived from composed integer seeds.

Every random draw in the package goes through :func:`rng_for` so that a
top-level seed plus a few namespace tags (module, round, restart ...) yields
reproducible, non-overlapping streams.
"""

from __future__ import annotations

import numpy as np


def seed_list(seed) -> list[int]:
    """Flatten an int or (nested) sequence-of-ints seed into a list of ints."""
    if isinstance(seed, (tuple, list)):
        flat: list[int] = []
        for part in seed:
            flat.extend(seed_list(part))
        return flat
    return [int(seed)]


def rng_for(seed, *tags: int) -> np.random.Generator:
    """A generator seeded by ``seed`` extended with namespace ``tags``."""
    return np.random.default_rng(seed_list(seed) + [int(t) for t in tags])
