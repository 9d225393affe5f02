"""Shared fixtures: exponent tables and normalized source solutions.

The (p, n) pairs used across the suite are the ones the closed forms are
exercised at: the quadratic-adjacent p = 2.5, the workhorse p = 3, and the
strongly degenerate p = 4, in one and two dimensions.
"""

import pytest

from pparab.params import derive_exponents
from pparab.exact import make_barenblatt


@pytest.fixture(scope="session")
def e31():
    return derive_exponents(3.0, 1)


@pytest.fixture(scope="session")
def e251():
    return derive_exponents(2.5, 1)


@pytest.fixture(scope="session")
def e32():
    return derive_exponents(3.0, 2)


@pytest.fixture(scope="session")
def e41():
    return derive_exponents(4.0, 1)


@pytest.fixture(scope="session")
def e42():
    return derive_exponents(4.0, 2)


@pytest.fixture(scope="session")
def b31(e31):
    return make_barenblatt(e31, mass=1.0)


@pytest.fixture(scope="session")
def b251(e251):
    return make_barenblatt(e251, mass=1.0)


@pytest.fixture(scope="session")
def b32(e32):
    return make_barenblatt(e32, mass=1.0)


@pytest.fixture(scope="session")
def ladder31(b31):
    """Closed-form trajectory on a decade-aligned log ladder, for the
    integrability window studies: 241 times from 1e-4 to 1 put every decade
    boundary exactly on a snapshot, so window cuts do not snap."""
    import numpy as np

    from pparab.grid import Trajectory, make_grid, sample_exact

    g = make_grid(-3.0, 3.0, 1.0 / 256)
    traj = Trajectory()
    for t in np.geomspace(1e-4, 1.0, 241):
        traj.append(sample_exact(b31, g, float(t)))
    return traj
