import functools

import numpy as np
import pytest

from fpcap import solver


@functools.lru_cache(maxsize=None)
def solved(k):
    """Default-option solution, shared across test modules."""
    return solver.solve_game(k)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_channel(rng, k):
    p = np.empty(k + 1)
    p[0], p[k] = 0.0, 1.0
    p[1:k] = rng.uniform(0.0, 1.0, k - 1)
    return p
