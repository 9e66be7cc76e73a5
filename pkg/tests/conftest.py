from fractions import Fraction

import numpy as np
import pytest

from affine_swor.design import ProbabilityVector, build_design


@pytest.fixture
def example_p():
    """The N=4 vector (.415, .25, .25, .085) in exact arithmetic."""
    return ProbabilityVector.from_values(["0.415", "0.25", "0.25", "0.085"])


@pytest.fixture
def example_design(example_p):
    return build_design(example_p, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def uniform(n_pop):
    return ProbabilityVector(tuple(Fraction(1, n_pop) for _ in range(n_pop)))
