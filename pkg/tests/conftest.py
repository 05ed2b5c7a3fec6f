import math

import pytest
from hypothesis import settings

from ellipticlab import problem as P
from ellipticlab.geometry import ModelManifold

settings.register_profile("default", deadline=None, max_examples=100, derandomize=True)
settings.load_profile("default")


@pytest.fixture(scope="session")
def cex():
    """V = d^-4 |log d|^-1.5 on the Euclidean disk (sigma = 3, eps = 0.25)."""
    return P.counterexample_spec()


@pytest.fixture(scope="session")
def exp_weight():
    """Exponentially small V with compensating weight (beta0 = 1, theta = 1, tau = 2)."""
    return P.exp_weight_spec()


@pytest.fixture(scope="session")
def log_bound():
    """V = d^-4 |log d|^-0.5: the HP1 bound with k = 0.25."""
    return P.log_lower_bound_spec(k=0.25)


def constant_spec(m: int, c: float = 1.0, p: float = 2.0, sigma: float = 3.0):
    return P.ProblemSpec(ModelManifold.euclidean(m), P.exponents(p, sigma),
                         P.PleFunction.constant(c))


J01 = 2.404825557695773
PI2 = math.pi ** 2
