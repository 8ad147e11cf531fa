from typing import Union

import numpy as np

RandomSource = Union[int, np.random.Generator, np.random.SeedSequence, None]


def as_generator(seed: RandomSource) -> np.random.Generator:
    """Turn a seed, SeedSequence or Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_generator(master_seed: int, index: int) -> np.random.Generator:
    """Generator for one sample, derived from (master seed, sample index).

    The derivation goes through SeedSequence, so sample `index` sees the
    same stream no matter how samples are split across workers.
    """
    return np.random.default_rng(np.random.SeedSequence([master_seed, index]))
