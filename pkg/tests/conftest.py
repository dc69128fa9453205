import numpy as np
import pytest

from specgap.functions import PolynomialFunction, collision_invariants


@pytest.fixture
def v1v2():
    return PolynomialFunction.from_terms(3, {(1, 1, 0): 1.0}, name="v1v2")


@pytest.fixture
def invariants():
    return collision_invariants(3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
