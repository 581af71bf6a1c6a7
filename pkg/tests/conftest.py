import numpy as np
import pytest

from degenash.grid import GridFunction, build_grid


@pytest.fixture
def small_grid():
    return build_grid(12, 12, 0.5)


def random_field(grid, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return GridFunction(grid, scale * rng.standard_normal(grid.n))
