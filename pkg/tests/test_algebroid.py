"""Algebroid sections, anchor, right-invariant extensions, and the two
brackets (dual-push algebroid side, finite-difference group side)."""

import math

import numpy as np
import pytest

from gpdlab import algebroid as al
from gpdlab import dual as dm
from gpdlab.algebroid import (AlgebroidSection, NotASectionError,
                              action_derivative_check, algebroid_bracket,
                              anchor, atiyah_bracket, constant_group_section,
                              gauge_section, group_bracket, pair_section,
                              phi_and_naturality_check, pushforward_section,
                              right_invariant_extension, zero_section)
from gpdlab.bisections import anchor_morphism
from gpdlab.dual import value
from gpdlab.groupoids import PairGroupoid, _values

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def sincos(request):
    P = PairGroupoid()
    return P, pair_section(P, dm.sin, name="sin"), pair_section(
        P, dm.cos, name="cos")


# ---------------------------------------------------------------------------
# sections


def test_verticality_check_rejects_source_motion(pair):
    with pytest.raises(NotASectionError):
        AlgebroidSection(pair, lambda x: np.array([0.1, 0.2], dtype=object))


def test_pair_section_is_vertical(sincos):
    _, X, _ = sincos
    assert X.verticality_residual() == 0.0


def test_gauge_section_is_vertical(gauge_linear):
    B = gauge_linear.bundle.group.algebra_basis()
    X = gauge_section(gauge_linear, lambda x: 0.3 * dm.sin(x),
                      lambda x: 0.2 * dm.cos(x) * np.asarray(B[0],
                                                             dtype=object))
    assert X.verticality_residual(n=8) == 0.0


def test_linear_structure(sincos):
    P, X, Y = sincos
    Z = X.add(Y).sub(Y)
    assert Z.sup_dist(X, n=8) < 1e-14
    assert X.scale(0.0).sup_dist(zero_section(P), n=8) == 0.0
    assert X.scale(2.0).sup_norm(n=8) == pytest.approx(2.0 * X.sup_norm(n=8))


# ---------------------------------------------------------------------------
# anchor and right-invariant extension


def test_anchor_of_pair_section(sincos):
    _, X, _ = sincos
    vf = anchor(X)
    for x in np.linspace(0.0, TWO_PI, 9, endpoint=False):
        assert value(vf(float(x))[0]) == pytest.approx(math.sin(x),
                                                       abs=1e-14)


def test_anchor_of_group_section_vanishes(so3_groupoid, rng):
    X = constant_group_section(so3_groupoid,
                               so3_groupoid.group.random_algebra(rng))
    assert anchor(X)(None).size == 0


def test_extension_restricts_to_section_at_units(sincos):
    P, X, _ = sincos
    for x in np.linspace(0.0, TWO_PI, 5, endpoint=False):
        u = P.unit(np.atleast_1d(x))
        got = _values(right_invariant_extension(X, u))
        assert np.max(np.abs(got - _values(X(float(x))))) < 1e-14


def test_extension_is_right_invariant(sincos, rng):
    """->X(g.h) = T(R_h)(->X(g)): the target-slot coefficient of the
    extension depends only on the target point."""
    P, X, _ = sincos
    for _ in range(5):
        g = P.random_element(rng)
        y = float(np.asarray(g, dtype=float)[0])
        got = _values(right_invariant_extension(X, g))
        assert got[0] == pytest.approx(math.sin(y), abs=1e-14)
        assert got[1] == 0.0


def test_extension_on_group(so3_groupoid, rng):
    """On a group, ->W(g) = W·g (right translation of the algebra
    element)."""
    G = so3_groupoid
    W = G.group.random_algebra(rng)
    X = constant_group_section(G, W)
    g = G.group.random_element(rng)
    got = _values(right_invariant_extension(X, g)).reshape(3, 3)
    assert np.max(np.abs(got - W @ np.asarray(g, dtype=float))) < 1e-13


# ---------------------------------------------------------------------------
# algebroid bracket


def test_pair_bracket_coefficient(sincos):
    """[sin d, cos d] = (sin·cos' - cos·sin') d = -d."""
    _, X, Y = sincos
    br = algebroid_bracket(X, Y)
    for x in np.linspace(0.0, TWO_PI, 9, endpoint=False):
        assert value(br(float(x))[0]) == pytest.approx(-1.0, abs=1e-12)


def test_group_algebroid_bracket_is_negative_commutator(so3_groupoid, rng):
    G = so3_groupoid
    V = G.group.random_algebra(rng)
    W = G.group.random_algebra(rng)
    br = algebroid_bracket(constant_group_section(G, V),
                           constant_group_section(G, W))
    got = _values(br(None)).reshape(3, 3)
    assert np.max(np.abs(got + (V @ W - W @ V))) < 1e-12


def test_bracket_antisymmetry(sincos):
    _, X, Y = sincos
    lhs = algebroid_bracket(X, Y, grid_n=8)
    rhs = algebroid_bracket(Y, X, grid_n=8).scale(-1.0)
    assert lhs.sup_dist(rhs, n=8) < 1e-12


def test_bracket_jacobi_identity(pair):
    X = pair_section(pair, dm.sin, name="X")
    Y = pair_section(pair, dm.cos, name="Y")
    Z = pair_section(pair, lambda x: dm.sin(2.0 * x), name="Z")
    j = algebroid_bracket(X, algebroid_bracket(Y, Z, grid_n=8), grid_n=8) \
        .add(algebroid_bracket(Y, algebroid_bracket(Z, X, grid_n=8),
                               grid_n=8)) \
        .add(algebroid_bracket(Z, algebroid_bracket(X, Y, grid_n=8),
                               grid_n=8))
    assert j.sup_norm(n=8) < 1e-10


# ---------------------------------------------------------------------------
# group-side bracket: opposite sign, h^2 convergence


def test_group_bracket_pair_sign_and_convergence(sincos, pair_addition):
    _, X, Y = sincos
    errs = []
    for h in (2e-3, 1e-3):
        gb = group_bracket(X, Y, pair_addition, h=h, grid_n=8)
        worst = max(abs(value(gb(float(x))[0]) - 1.0)
                    for x in np.linspace(0.0, TWO_PI, 6, endpoint=False))
        errs.append(worst)
    assert errs[1] < 5e-4  # the +1 coefficient, opposite to the algebroid
    ratio = errs[0] / errs[1]
    assert ratio > 2.5  # O(h^2): halving h shrinks the error ~4x


def test_group_bracket_so3_is_commutator(so3_groupoid, so3_addition, rng):
    G = so3_groupoid
    V = G.group.random_algebra(rng)
    W = G.group.random_algebra(rng)
    gb = group_bracket(constant_group_section(G, V),
                       constant_group_section(G, W), so3_addition, h=1e-3,
                       grid_n=1)
    got = _values(gb(None)).reshape(3, 3)
    assert np.max(np.abs(got - (V @ W - W @ V))) < 5e-4


# ---------------------------------------------------------------------------
# naturality, total-space cross-check, action derivative


def test_naturality_trivial_cocycle(gauge_trivial):
    P = PairGroupoid()
    f = anchor_morphism(gauge_trivial, P)
    B = gauge_trivial.bundle.group.algebra_basis()

    def vert(shift):
        return lambda x: (0.2 * dm.sin(x + shift)) * np.asarray(
            B[0], dtype=object)

    X = gauge_section(gauge_trivial, lambda x: 0.3 * dm.sin(x) + 0.1,
                      vert(0.0), name="X")
    Y = gauge_section(gauge_trivial, lambda x: 0.2 * dm.cos(x),
                      vert(1.0), name="Y")
    rep = phi_and_naturality_check(f, X, Y, n=6)
    assert rep["algebroid_naturality"] < 1e-8


def test_atiyah_cross_check(gauge_trivial):
    B = gauge_trivial.bundle.group.algebra_basis()
    X = gauge_section(gauge_trivial, lambda x: 0.3 * dm.sin(x) + 0.1,
                      lambda x: 0.2 * dm.sin(x) * np.asarray(B[0],
                                                             dtype=object))
    Y = gauge_section(gauge_trivial, lambda x: 0.2 * dm.cos(x),
                      lambda x: (0.15 * dm.cos(x) + 0.1) * np.asarray(
                          B[-1], dtype=object))
    br = algebroid_bracket(X, Y, grid_n=8)
    at = atiyah_bracket(gauge_trivial, X, Y, grid_n=8)
    assert br.sup_dist(at, n=8) < 1e-8


def test_pushforward_section_anchor(gauge_trivial):
    P = PairGroupoid()
    f = anchor_morphism(gauge_trivial, P)
    X = gauge_section(gauge_trivial, lambda x: 0.3 * dm.sin(x),
                      lambda x: np.zeros((3, 3), dtype=object))
    img = pushforward_section(f, X, grid_n=8)
    want = pair_section(P, lambda x: 0.3 * dm.sin(x), grid_n=8)
    assert img.sup_dist(want, n=8) < 1e-12


def test_action_derivative(sincos, pair_addition, rng):
    _, X, _ = sincos
    assert action_derivative_check(X, pair_addition, rng, n=10) < 1e-12
