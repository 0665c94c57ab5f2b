import pytest

from natmetric.partitions import adapted_hierarchy, polyadic_hierarchy
from natmetric.sequences import PHI, SQRT2, SQRT3, FracMultiples


@pytest.fixture(scope="session")
def phi():
    return FracMultiples(PHI)


@pytest.fixture(scope="session")
def sqrt2():
    return FracMultiples(SQRT2)


@pytest.fixture(scope="session")
def sqrt3():
    return FracMultiples(SQRT3)


@pytest.fixture(scope="session")
def polyadic6():
    return polyadic_hierarchy(6)


@pytest.fixture(scope="session")
def adapted_phi(phi):
    return adapted_hierarchy(phi, 3)
