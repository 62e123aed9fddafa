import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_symmetric_stage(rng, q, scale=0.5):
    """Stage lists of a random palindromic scheme with unit sums."""
    from trotterkit.scheme_core import symmetric_to_stage

    p = rng.normal(scale=scale, size=q + 1)
    a, b = symmetric_to_stage(p, q)
    a = a + (1.0 - a.sum()) / a.size
    b = b + (1.0 - b.sum()) / b.size
    return a, b
