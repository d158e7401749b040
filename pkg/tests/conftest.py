"""Shared fixtures: small grids and their dyadic partitions.

Session scope keeps the FFT plans and multiplier stacks warm; every test
that mutates a field works on copies, so sharing is safe.
"""

import numpy as np
import pytest

from lanslab import TorusGrid, build_partition


@pytest.fixture(scope="session")
def grid8():
    return TorusGrid(dim=3, points_per_axis=8)


@pytest.fixture(scope="session")
def grid16():
    return TorusGrid(dim=3, points_per_axis=16)


@pytest.fixture(scope="session")
def grid32():
    return TorusGrid(dim=3, points_per_axis=32)


@pytest.fixture(scope="session")
def grid16_2d():
    return TorusGrid(dim=2, points_per_axis=16)


@pytest.fixture(scope="session")
def part16(grid16):
    return build_partition(grid16)


@pytest.fixture(scope="session")
def part32(grid32):
    return build_partition(grid32)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
