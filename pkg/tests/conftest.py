import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def tied_sample(rng, max_n=200, min_n=2):
    """Two overlapping groups of integer scores with plenty of ties.

    Sizes are drawn up to ``max_n``; draws where one group lies entirely
    above the other are rejected, so every statistic is well defined.
    """
    while True:
        n1 = int(rng.integers(min_n, max_n + 1))
        n2 = int(rng.integers(min_n, max_n + 1))
        levels = int(rng.integers(2, 12))
        shift = int(rng.integers(0, 3))
        y1 = rng.integers(0, levels, n1).astype(float)
        y2 = rng.integers(0, levels, n2).astype(float) + shift
        if y1.max() > y2.min() and y2.max() > y1.min():
            return y1, y2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
