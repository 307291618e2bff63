import numpy as np
import pytest
from hypothesis import settings

from volsample import fixtures

settings.register_profile("ci", deadline=None, derandomize=True)
settings.load_profile("ci")


@pytest.fixture
def degenerate():
    """3x2 design with duplicated rows: one subset pair has volume 0."""
    return fixtures.degenerate_problem()


@pytest.fixture
def perturbed():
    return fixtures.perturbed_problem(eps=0.1)


@pytest.fixture
def gauss82():
    return fixtures.gaussian_matrix(8, 2, seed=11)


@pytest.fixture
def gauss83():
    return fixtures.gaussian_matrix(8, 3, seed=11)


def gaussian_xy(n, d, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, d)), rng.standard_normal(n)
