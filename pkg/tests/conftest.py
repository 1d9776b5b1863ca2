import numpy as np
import pytest

from bloch_green.potential import cell_constants, load_potential, square_potential

SQUARE_SPEC = "period=1; const V=0 len=0.6; const V=1 len=0.4"
COSINE_SPEC = "period=2; cosine amp=0.3 len=2"
FREE_SPEC = "period=1; const V=0 len=1"


@pytest.fixture(scope="session")
def pot_square():
    return square_potential(1.0, 1.0, 0.6)


@pytest.fixture(scope="session")
def pot_cosine():
    return load_potential(COSINE_SPEC)


@pytest.fixture(scope="session")
def pot_free():
    return load_potential(FREE_SPEC)


@pytest.fixture(scope="session")
def cc_square(pot_square):
    return cell_constants(pot_square)


@pytest.fixture(scope="session")
def cc_cosine(pot_cosine):
    return cell_constants(pot_cosine)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
