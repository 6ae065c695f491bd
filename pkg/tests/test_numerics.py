"""Numeric substrate against scipy oracles and convergence laws."""

import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from gpdlab import dual as dm
from gpdlab.dual import Dual, deriv, value
from gpdlab.numerics import (ChebyshevMatrixField, IntegrationParams,
                             NotADiffeomorphismError, PartitionOfUnity,
                             PeriodicGridFunction,
                             PiecewiseChebyshevMatrixField, derivative,
                             fd_derivative, invert_circle_diffeo, rk4_solve,
                             smooth_bump)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# RK4


def test_rk4_against_scipy_on_nonlinear_ode():
    def rhs(t, y):
        return np.array([y[1], -math.sin(y[0])])  # pendulum

    y0 = np.array([1.2, 0.3])
    path = rk4_solve(lambda t, y: rhs(t, y), y0,
                     IntegrationParams(steps=200, t0=0.0, t1=2.0))
    ref = solve_ivp(rhs, (0.0, 2.0), y0, rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(path[-1] - ref.y[:, -1])) < 1e-8


def test_rk4_fourth_order_convergence():
    # y' = y, exact e at t=1
    errs = []
    for steps in (8, 16, 32):
        path = rk4_solve(lambda t, y: y, np.array([1.0]),
                         IntegrationParams(steps=steps))
        errs.append(abs(path[-1][0] - math.e))
    assert errs[0] / errs[1] > 14.0
    assert errs[1] / errs[2] > 14.0


def test_rk4_carries_dual_state():
    # y' = y with dual initial data: derivative of e^t w.r.t. y0 is e^t
    y0 = np.array([Dual(1.0, 1.0)], dtype=object)
    path = rk4_solve(lambda t, y: y, y0, IntegrationParams(steps=64))
    assert value(path[-1][0]) == pytest.approx(math.e, abs=1e-8)
    assert deriv(path[-1][0]) == pytest.approx(math.e, abs=1e-8)


def test_integration_params_validation():
    with pytest.raises(ValueError):
        IntegrationParams(steps=0)


# ---------------------------------------------------------------------------
# circle diffeo inversion


def _lift(x):
    return x + 0.4 * dm.sin(x)


def test_invert_circle_diffeo_roundtrip():
    for y in np.linspace(-1.0, 7.0, 17):
        x = invert_circle_diffeo(_lift, float(y))
        assert _lift(x) == pytest.approx(y, abs=1e-11)


def test_invert_circle_diffeo_dual_uses_ift():
    y = Dual(2.0, 1.0)
    x = invert_circle_diffeo(_lift, y)
    # d/dy f^{-1}(y) = 1 / f'(f^{-1}(y))
    assert deriv(x) == pytest.approx(1.0 / derivative(_lift, value(x)),
                                     abs=1e-10)


def test_invert_rejects_non_monotone_lift():
    with pytest.raises(NotADiffeomorphismError):
        invert_circle_diffeo(lambda x: x + 2.0 * dm.sin(x), 1.0)


# ---------------------------------------------------------------------------
# periodic interpolation


def test_periodic_grid_function_exact_below_nyquist():
    f = lambda x: 1.0 + math.sin(x) - 0.3 * math.cos(3.0 * x)  # noqa: E731
    g = PeriodicGridFunction.sample(f, n=32)
    for x in np.linspace(0.0, TWO_PI, 23, endpoint=False):
        assert g(float(x)) == pytest.approx(f(float(x)), abs=1e-12)


# ---------------------------------------------------------------------------
# Chebyshev matrix fields


def _mat_fn(x):
    return np.array([[math.sin(x), x * x], [math.cos(2.0 * x), 1.0]])


def test_chebyshev_fit_and_eval():
    F = ChebyshevMatrixField.fit(_mat_fn, -1.0, 2.0, deg=40)
    assert F.max_error(_mat_fn, n=100) < 1e-12


def test_chebyshev_antiderivative_matches_quad():
    F = ChebyshevMatrixField.fit(_mat_fn, -1.0, 2.0, deg=40)
    Fi = F.antiderivative()
    a, b = -0.3, 1.7
    got = Fi(b) - Fi(a)
    for r in range(2):
        for c in range(2):
            want, _ = quad(lambda x: _mat_fn(x)[r, c], a, b)
            assert got[r, c] == pytest.approx(want, abs=1e-10)


def test_chebyshev_dual_evaluation():
    F = ChebyshevMatrixField.fit(_mat_fn, -1.0, 2.0, deg=40)
    out = F(Dual(0.5, 1.0))
    fd = fd_derivative(lambda x: _mat_fn(x)[0, 0], 0.5)
    assert deriv(out[0, 0]) == pytest.approx(fd, abs=1e-7)
    assert value(out[1, 0]) == pytest.approx(_mat_fn(0.5)[1, 0], abs=1e-12)


def test_chebyshev_shift():
    F = ChebyshevMatrixField.fit(_mat_fn, -1.0, 2.0, deg=40)
    G = F.shift(np.ones((2, 2)))
    assert np.allclose(np.asarray(G(0.3), dtype=float),
                       np.asarray(F(0.3), dtype=float) + 1.0)


def test_piecewise_chebyshev_continuous_antiderivative():
    F = PiecewiseChebyshevMatrixField.fit(_mat_fn, -1.0, 2.0, deg=12,
                                          panels=6)
    assert F.max_error(_mat_fn, n=150) < 1e-11
    Fi = F.antiderivative()
    assert np.max(np.abs(np.asarray(Fi(-1.0), dtype=float))) < 1e-12
    # continuity across every panel edge
    width = 3.0 / 6.0
    for k in range(1, 6):
        e = -1.0 + k * width
        lo = np.asarray(Fi.pieces[k - 1](e), dtype=float)
        hi = np.asarray(Fi.pieces[k](e), dtype=float)
        assert np.max(np.abs(lo - hi)) < 1e-12
    a, b = -0.6, 1.9
    want, _ = quad(lambda x: _mat_fn(x)[0, 0], a, b)
    assert (Fi(b) - Fi(a))[0, 0] == pytest.approx(want, abs=1e-10)


# ---------------------------------------------------------------------------
# bumps and partitions of unity


def test_smooth_bump_support_and_smoothness():
    assert smooth_bump(1.0) == 0.0
    assert smooth_bump(-1.2) == 0.0
    assert smooth_bump(0.0) == pytest.approx(math.exp(-1.0))
    # derivative exists and is small near the edge
    d = deriv(smooth_bump(Dual(0.99, 1.0)))
    assert abs(d) < 1.0


def test_partition_of_unity_sums_to_one():
    arcs = [(-0.7, math.pi + 0.7), (math.pi - 0.7, TWO_PI + 0.7)]
    pou = PartitionOfUnity(arcs)
    for x in np.linspace(0.0, TWO_PI, 41, endpoint=False):
        ws = pou.weights(float(x))
        assert all(value(w) >= 0.0 for w in ws)
        assert sum(value(w) for w in ws) == pytest.approx(1.0, abs=1e-14)
        assert value(pou.partial_sum(2, float(x))) == pytest.approx(
            1.0, abs=1e-14)
        assert value(pou.partial_sum(0, float(x))) == 0.0


def test_partition_of_unity_rejects_non_cover():
    with pytest.raises(ValueError):
        PartitionOfUnity([(0.0, 1.0), (2.0, 3.0)])
