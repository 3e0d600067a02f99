"""Deterministic derivation of child seeds from a master seed.

All stochastic stages (SMOTE, forest trees, experiment runs) draw their
randomness from seeds derived here, so results are reproducible and
independent of execution order or thread scheduling.
"""

import numpy as np

# role tags keep the derived streams disjoint
ROLE_SMOTE = 1
ROLE_FOREST = 2
ROLE_TREE = 3
ROLE_RUN = 4
ROLE_NET = 5


def derive_seed(master_seed: int, *tags: int) -> int:
    """Return a child seed determined by ``master_seed`` and integer tags."""
    if master_seed < 0:
        raise ValueError("seeds must be non-negative")
    seq = np.random.SeedSequence([int(master_seed), *[int(t) for t in tags]])
    return int(seq.generate_state(1, dtype=np.uint64)[0])
