"""Right-invariant flows and the product integral, against closed-form
and scipy oracles."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from gpdlab import dual as dm
from gpdlab import flow as fl
from gpdlab.algebroid import constant_group_section, pair_section
from gpdlab.dual import value
from gpdlab.flow import (BisectionPath, EtaTooLargeError,
                         TimeDependentSection, alpha_drift, evolve, flow,
                         flow_properties_check, product_integral_residual,
                         ri_field)
from gpdlab.groupoids import _values
from gpdlab.manifolds import expm_series
from gpdlab.numerics import IntegrationParams

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def so3_eta(so3_groupoid):
    V = so3_groupoid.group.from_algebra_coords([0.4, -0.3, 0.5])
    X = constant_group_section(so3_groupoid, V)
    return V, TimeDependentSection.constant(X)


def _pair_eta(pair):
    X = pair_section(pair, lambda x: 0.5 * dm.sin(x) + 0.1, name="v")
    return TimeDependentSection.constant(X)


# ---------------------------------------------------------------------------
# the flow itself


def test_flow_constant_field_is_group_exponential(so3_groupoid, so3_eta):
    V, eta = so3_eta
    g1 = flow(0.0, 1.0, so3_groupoid.unit(None), eta,
              IntegrationParams(steps=100))
    want = np.asarray(expm_series(np.asarray(V, dtype=object)), dtype=float)
    assert np.max(np.abs(np.asarray(g1, dtype=float) - want)) < 1e-10


def test_flow_pair_against_scipy(pair):
    """On the pair groupoid the flow moves the target point along the
    base vector field: compare with solve_ivp."""
    eta = _pair_eta(pair)
    g0 = np.array([1.0, 2.5])
    got = flow(0.0, 1.0, g0, eta, IntegrationParams(steps=100))
    ref = solve_ivp(lambda t, y: [0.5 * math.sin(y[0]) + 0.1], (0.0, 1.0),
                    [1.0], rtol=1e-12, atol=1e-12)
    assert value(got[0]) == pytest.approx(ref.y[0, -1], abs=1e-9)
    assert value(got[1]) == 2.5  # source untouched


def test_flow_preserves_source(pair, gauge_linear, rng):
    from gpdlab.algebroid import gauge_section

    B = gauge_linear.bundle.group.algebra_basis()
    X = gauge_section(gauge_linear, lambda x: 0.3 * dm.sin(x) + 0.1,
                      lambda x: 0.2 * dm.cos(x) * np.asarray(B[0],
                                                             dtype=object))
    for G, eta in ((pair, _pair_eta(pair)),
                   (gauge_linear, TimeDependentSection.constant(X))):
        g0 = G.random_element(rng)
        g1 = flow(0.0, 1.0, g0, eta, IntegrationParams(steps=40))
        assert alpha_drift(G, g0, g1) < 1e-12


def test_flow_fourth_order_convergence(so3_groupoid, so3_eta):
    V, eta = so3_eta
    want = np.asarray(expm_series(np.asarray(V, dtype=object)), dtype=float)
    errs = []
    for steps in (8, 16):
        got = flow(0.0, 1.0, so3_groupoid.unit(None), eta,
                   IntegrationParams(steps=steps))
        errs.append(np.max(np.abs(np.asarray(got, dtype=float) - want)))
    assert errs[0] / errs[1] >= 14.0


def test_flow_properties(so3_groupoid, so3_eta, rng):
    _, eta = so3_eta
    rep = flow_properties_check(eta, rng, samples=3,
                                params=IntegrationParams(steps=60))
    assert rep["cocycle"] < 1e-7
    assert rep["equivariance"] < 1e-10
    assert rep["alpha_invariance"] == 0.0
    assert rep["time1_is_bisection"]


def test_time_dependent_interpolation(pair):
    X1 = pair_section(pair, dm.sin)
    X2 = pair_section(pair, dm.cos)
    eta = TimeDependentSection.from_samples(
        pair, [0.0, 1.0], [X1, X2])
    mid = eta(0.25, 1.0)
    want = 0.75 * math.sin(1.0) + 0.25 * math.cos(1.0)
    assert value(mid[0]) == pytest.approx(want, abs=1e-14)
    assert eta.check_slices() == 0.0


def test_ri_field_at_unit_equals_section(pair):
    eta = _pair_eta(pair)
    x = 1.3
    got = _values(ri_field(0.0, pair.unit(np.atleast_1d(x)), eta))
    assert got[0] == pytest.approx(0.5 * math.sin(x) + 0.1, abs=1e-14)
    assert got[1] == 0.0


# ---------------------------------------------------------------------------
# the evolution map


def test_evolve_slices_are_bisections(pair):
    eta = _pair_eta(pair)
    path = evolve(eta, IntegrationParams(steps=60), n_slices=4, grid_n=16)
    assert len(path.slices) == 4
    for b in path.slices:
        assert b.beta.min_slope > 1e-8
    from gpdlab.bisections import unit_bisection
    assert path(0.0).sup_dist(unit_bisection(pair, grid_n=16)) == 0.0


def test_evolve_rejects_oversized_field(pair):
    # strong contraction toward the attracting zero: the time-1 slope
    # collapses below the diffeomorphism threshold
    X = pair_section(pair, lambda x: 40.0 * dm.sin(x), name="huge")
    eta = TimeDependentSection.constant(X)
    with pytest.raises(EtaTooLargeError):
        evolve(eta, IntegrationParams(steps=40), n_slices=3, grid_n=16)


def test_product_integral_residual_and_fd_order(pair):
    eta = _pair_eta(pair)
    params = IntegrationParams(steps=120)
    path = evolve(eta, params, n_slices=4, grid_n=16)
    res = [product_integral_residual(eta, path, fd=fd, params=params,
                                     n_base=4)
           for fd in (5e-3, 2.5e-3)]
    assert res[1] < 1e-5
    assert res[0] / res[1] > 2.5  # central difference: O(fd^2)


def test_path_time_lookup(pair):
    eta = _pair_eta(pair)
    path = evolve(eta, IntegrationParams(steps=40), n_slices=3, grid_n=16)
    assert path(0.5) is path.slices[1]
    with pytest.raises(KeyError):
        path(0.123)
