import numpy as np
import pytest

from wallflux import Domain, PhysicalParams, WaveField, make_grid


@pytest.fixture
def params():
    return PhysicalParams()


def field_from(fn, grid, time=0.0, zero_ends=False):
    """Sample a callable onto a grid as a WaveField."""
    vals = np.asarray(fn(grid.nodes), dtype=complex)
    if zero_ends:
        vals[0] = vals[-1] = 0.0
    return WaveField(grid, vals, time)


@pytest.fixture
def unit_grid():
    return make_grid(Domain(-1.0, 1.0), 513)
