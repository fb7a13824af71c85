import hypothesis
import numpy as np
import pytest

from schroctl import (Grid, PotentialPair, build_basis, evaluate_family,
                      make_tables)

hypothesis.settings.register_profile(
    "ci", max_examples=25, deadline=None, derandomize=True)
hypothesis.settings.load_profile("ci")

# generic pair: satisfies the non-degeneracy conditions at N = 8 (checked
# in test_conditions); shared by most control-level tests
GENERIC_V = "linear 1"
GENERIC_Q = "gauss 1 0.37 0.08"


@pytest.fixture(scope="session")
def generic_basis():
    grid = Grid(2048)
    pots = PotentialPair(evaluate_family(GENERIC_V, grid),
                         evaluate_family(GENERIC_Q, grid))
    return build_basis(grid, pots, 12)


@pytest.fixture(scope="session")
def generic_tables(generic_basis):
    return make_tables(generic_basis, 1e-3)


@pytest.fixture(scope="session")
def v0_basis():
    # V = 0, Q = x on a fine grid: the closed-form calibration case
    grid = Grid(4096)
    pots = PotentialPair(np.zeros(4096), evaluate_family("linear 1", grid))
    return build_basis(grid, pots, 10)


@pytest.fixture(scope="session")
def cubic_setup():
    grid = Grid(256)
    pots = PotentialPair(evaluate_family(GENERIC_V, grid),
                         evaluate_family(GENERIC_Q, grid))
    from schroctl import make_cubic_tables
    return grid, pots, make_cubic_tables(grid, pots, dt=1e-3)
