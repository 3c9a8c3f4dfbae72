import pytest

from qwmodel.model_core import PhysicalConstants, make_params


@pytest.fixture(scope="session")
def params32():
    """Smallest admissible model: s = 3/2, unit confinement, one body per side."""
    return make_params("3/2", "1", N=1, r="1/100000")


@pytest.fixture(scope="session")
def params52():
    return make_params("5/2", "1", N=1, r="1/100000")


@pytest.fixture(scope="session")
def params_w2():
    return make_params("3/2", "2", N=1, r="1/100000")


@pytest.fixture(scope="session")
def unit_consts():
    """Order-one constants so trajectory periods are order one in tests."""
    return PhysicalConstants(hbar=2.0, m_light=1.0)
