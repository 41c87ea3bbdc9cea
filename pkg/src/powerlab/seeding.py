"""Counter-based seed derivation.

A master seed and a tuple of integer keys (for instance ``(stream, trial)``)
map to an independent 64-bit seed, so every trial is reproducible on its own
and independent of execution order.
"""

import numpy as np


def derive_seed(master: int, *keys: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))
