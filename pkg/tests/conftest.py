import warnings

import numpy as np
import pytest

from ds1.grid import RealField, make_grid
from ds1.operators import ResolutionWarning
from ds1.reference import dromion_radiating
from ds1.stationary import newton_solve


def pytest_configure(config):
    warnings.simplefilter("ignore", ResolutionWarning)


@pytest.fixture(scope="session")
def tier_grid():
    """Smallest grid that fully resolves the stationary state (k_max = 25.6)."""
    return make_grid(512, 512, 10.0, 10.0)


@pytest.fixture(scope="session")
def tier_q(tier_grid):
    """Converged stationary state on the test-tier grid (a few seconds)."""
    q0 = RealField(tier_grid, 6.0 * dromion_radiating(tier_grid).values)
    return newton_solve(q0)
