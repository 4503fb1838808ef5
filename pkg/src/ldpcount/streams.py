"""Seedable, splittable random streams.

Every random draw in the package comes from a generator derived from a master
seed and a tuple of integer keys, so results do not depend on evaluation
order or on how work is spread over threads.
"""

from __future__ import annotations

import numpy as np

# Key prefixes for the different consumers of randomness.
LOWER = 1
AUGMENT = 2
COUNT = 3
NESTED = 4
GENXOR = 5
BOOST_MC = 6


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for cell ``key`` under master seed ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def fresh_seed() -> int:
    """Draw a master seed from system entropy (echoed in reports)."""
    return int(np.random.SeedSequence().entropy % (1 << 63))
