"""Shared fixtures.

Session scope matters for the gauge fixtures: fitting the interpolated
connection antiderivative takes a noticeable fraction of a second per
chart, and every flow / addition test on the gauge groupoid reuses it.
"""

import numpy as np
import pytest

from gpdlab.additions import (flat_pair_addition, gauge_addition,
                              group_addition)
from gpdlab.groupoids import (GaugeGroupoid, GroupOverPoint, PairGroupoid,
                              PrincipalBundle, linear_cocycle)
from gpdlab.manifolds import SO3, Heisenberg3


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def pair():
    return PairGroupoid()


@pytest.fixture(scope="session")
def so3_groupoid():
    return GroupOverPoint(SO3())


@pytest.fixture(scope="session")
def heis_groupoid():
    return GroupOverPoint(Heisenberg3())


@pytest.fixture(scope="session")
def gauge_linear():
    """Gauge groupoid of the two-arc SO3 bundle with the reference
    rotation cocycle k(x) = exp(x * e_z-hat)."""
    group = SO3()
    return GaugeGroupoid(PrincipalBundle(group, cocycle=linear_cocycle(group)))


@pytest.fixture(scope="session")
def gauge_trivial():
    """Gauge groupoid with the constant-identity cocycle: the product
    structure in disguise."""
    group = SO3()
    return GaugeGroupoid(PrincipalBundle(
        group, cocycle=lambda x: np.eye(3, dtype=object)))


@pytest.fixture(scope="session")
def pair_addition(pair):
    return flat_pair_addition(pair)


@pytest.fixture(scope="session")
def so3_addition(so3_groupoid):
    return group_addition(so3_groupoid)


@pytest.fixture(scope="session")
def gauge_linear_addition(gauge_linear):
    return gauge_addition(gauge_linear)


@pytest.fixture(scope="session")
def gauge_trivial_addition(gauge_trivial):
    return gauge_addition(gauge_trivial)
