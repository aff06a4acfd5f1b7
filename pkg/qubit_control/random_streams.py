"""
Random Streams
Counter-based generators so multistart and sweep runs are bit-reproducible
"""

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator keyed by (seed, *stream), e.g. (seed, node, start)"""

    sequence = np.random.SeedSequence([int(seed), *[int(s) for s in stream]])
    return np.random.Generator(np.random.Philox(sequence))
