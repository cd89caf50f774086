import warnings

import numpy as np
import pytest

from fracfem.assembly import assemble_system
from fracfem.geometry import mesh_disc, mesh_interval


def ones(x):
    return np.ones(len(np.atleast_2d(x)))


@pytest.fixture(scope="session")
def mesh_1d_32():
    return mesh_interval(1 / 32, r=1.0, H_target=1.0)


@pytest.fixture(scope="session")
def mesh_2d_small():
    return mesh_disc(0.25, r=0.5, H_target=0.5)


@pytest.fixture(scope="session")
def system_1d_s05(mesh_1d_32):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return assemble_system(mesh_1d_32, 0.5, f=ones)
