import numpy as np
import pytest

from splitvar import (
    Grid,
    GridFunction,
    SolveConfig,
    make_pair,
    make_phi_nu,
    power_density2,
)


@pytest.fixture(scope="session")
def phi15():
    return make_phi_nu(1.5)


@pytest.fixture(scope="session")
def power2():
    return power_density2(2.0)


@pytest.fixture(scope="session")
def pair_std(phi15, power2):
    return make_pair(phi15, power2)


def affine_field(grid: Grid, a: float, b: float) -> GridFunction:
    return GridFunction.from_callable(grid, lambda x1, x2: a * x1 + b * x2)


@pytest.fixture()
def affine_config(pair_std):
    """The standard affine problem on a small grid (fast variant)."""
    grid = Grid(16, 16)
    return SolveConfig(
        grid=grid,
        densities=pair_std,
        u0=affine_field(grid, 2.0, -1.0),
        delta_schedule=[1e-1, 1e-2, 1e-3],
    )
