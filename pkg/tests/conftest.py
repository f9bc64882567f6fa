import numpy as np
import pytest

from bbtrack.grid import Grid, StaggeredField
from bbtrack.fields import leray_project


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_field(grid, rng, div_free=False):
    f = StaggeredField.from_vec(grid, rng.standard_normal(grid.n_dof))
    return leray_project(f)[0] if div_free else f


@pytest.fixture
def grid16():
    return Grid(16, 16, 1.0, 8)
