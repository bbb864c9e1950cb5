"""
Pytest configuration and shared fixtures for toric-py tests.
"""

import numpy as np
import pytest
from toric import (
    GridSpec,
    TraceMode,
    assemble,
    reduced_scan_geometry,
)
from toric.phantoms import PhantomSpec, Disk, Region


@pytest.fixture
def rng():
    """Seeded generator for random test vectors."""
    return np.random.default_rng(20240611)


@pytest.fixture
def small_grid():
    """A 32 x 32 grid on the unit square."""
    return GridSpec(32)


@pytest.fixture
def tiny_geom():
    """Reduced scan lattice: 36 angles x 12 radii."""
    return reduced_scan_geometry(36, 12)


@pytest.fixture
def binary_operator(small_grid, tiny_geom):
    """Binary operator on the small grid."""
    return assemble(small_grid, tiny_geom, TraceMode.BINARY, workers=2)


@pytest.fixture
def length_operator(small_grid, tiny_geom):
    """Length-weighted operator on the small grid."""
    return assemble(small_grid, tiny_geom, TraceMode.LENGTH, workers=2)


@pytest.fixture
def two_disk_phantom():
    """Two disks with one metric region each."""
    return PhantomSpec(
        shapes=[Disk((-0.3, 0.1), 0.2, 2.0), Disk((0.35, -0.2), 0.15, 1.0)],
        regions=[
            Region("left", Disk((-0.3, 0.1), 0.12, 1.0), 2.0),
            Region("right", Disk((0.35, -0.2), 0.08, 1.0), 1.0),
        ],
        name="two disks",
    )


@pytest.fixture
def phantom_text():
    """Phantom file contents with a disk, an ellipse and a region."""
    return (
        "# test phantom\n"
        "name = file phantom\n"
        "disk center=0.1,0.2 radius=0.3 value=1.5\n"
        "ellipse center=-0.2,-0.1 axes=0.2,0.1 angle=30 value=2\n"
        "region name=D shape=disk center=0.1,0.2 radius=0.1 value=1.5\n"
    )


@pytest.fixture
def config_text():
    """A small, fast experiment config."""
    return (
        "# quick run\n"
        "grid_n = 24\n"
        "geometry = reduced\n"
        "n_alpha = 24\n"
        "n_radii = 8\n"
        "mode = length\n"
        "phantom = simple\n"
        "noise = 0.01\n"
        "seed = 7\n"
        "method = cgls\n"
        "lambda = 0.01\n"
        "iters = 20\n"
    )
