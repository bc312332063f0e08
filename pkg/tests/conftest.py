import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def unit_vector(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)
