import numpy as np
import pytest

from alphamatch.data import make_two_moons, ssl_split


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_moons():
    """A quick two-moons split: 8 labeled, 92 unlabeled, 60 test points."""
    xs, ys = make_two_moons(160, 0.1, seed=3)
    return ssl_split(xs, ys, 4, 60, seed=3)
