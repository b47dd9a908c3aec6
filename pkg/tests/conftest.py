import pytest

from gfcalc.convolution import make_graded_grid


@pytest.fixture(scope="session")
def grid1024():
    return make_graded_grid(1.0, 1024, 2.0)


@pytest.fixture(scope="session")
def grid256():
    return make_graded_grid(1.0, 256, 2.0)
