"""Counter-based random number streams.

Every stochastic routine in the package derives its generator here from an
integer key tuple, so results are reproducible and independent of execution
order or worker count.
"""

from __future__ import annotations

import numpy as np


def make_generator(*keys: int) -> np.random.Generator:
    """Philox generator keyed by a tuple of integers."""
    seq = np.random.SeedSequence(tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))
