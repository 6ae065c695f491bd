"""Local additions: adaptedness, Newton inversion, chart independence,
sprays, and the induced addition on the tangent prolongation."""

import math

import numpy as np
import pytest

from gpdlab.additions import (LocalAddition, NotAdaptedError,
                              bundle_addition, check_adapted,
                              flat_pair_addition, flip_addition,
                              gauge_overlap_residual, group_addition,
                              opposite_addition, roundtrip_residual,
                              spray_extension)
from gpdlab.dual import value
from gpdlab.groupoids import GroupBundle, TangentArrow
from gpdlab.manifolds import SO3, Heisenberg3, OutOfChartError, expm_series


def test_flat_pair_adapted_and_roundtrip(pair_addition, rng):
    assert check_adapted(pair_addition, rng, n=40) < 1e-14
    assert roundtrip_residual(pair_addition, rng, n=10) < 1e-10


def test_group_addition_adapted_and_roundtrip(so3_addition, rng):
    assert check_adapted(so3_addition, rng, n=40) < 1e-12
    assert roundtrip_residual(so3_addition, rng, n=10) < 1e-10


def test_bundle_addition(rng):
    G = GroupBundle(Heisenberg3())
    A = bundle_addition(G)
    assert check_adapted(A, rng, n=20) < 1e-12
    assert roundtrip_residual(A, rng, n=5) < 1e-10


def test_gauge_addition(gauge_linear_addition, rng):
    assert check_adapted(gauge_linear_addition, rng, n=15) < 1e-12
    assert roundtrip_residual(gauge_linear_addition, rng, n=4) < 1e-9


def test_gauge_addition_chart_overlap(gauge_linear_addition, rng):
    assert gauge_overlap_residual(gauge_linear_addition, rng, n=6) < 1e-10


def test_opposite_addition_is_target_adapted(so3_addition, pair_addition,
                                             rng):
    for A in (so3_addition, pair_addition):
        Aop = opposite_addition(A)
        assert Aop.adapted_to == "target"
        assert check_adapted(Aop, rng, n=20) < 1e-12


def test_opposite_requires_source_adapted(so3_addition):
    with pytest.raises(ValueError):
        opposite_addition(opposite_addition(so3_addition))


def test_addition_respects_zero_vector(pair_addition, so3_addition,
                                       gauge_linear_addition, rng):
    for A in (pair_addition, so3_addition, gauge_linear_addition):
        g = A.G.random_element(rng)
        assert A.G.element_dist(A.apply(g, np.zeros(A.G.coord_dim)), g) == 0.0


def test_domain_guard(pair_addition, rng):
    g = pair_addition.G.random_element(rng)
    with pytest.raises(OutOfChartError):
        pair_addition.apply(g, np.array([3.0, 0.0]))


def test_check_adapted_catches_drift(pair):
    # addition that illegally moves the source coordinate
    bad = LocalAddition(pair, lambda g, v: np.asarray(g) + v + 0.01,
                        adapted_to="source", name="bad")
    with pytest.raises(NotAdaptedError):
        check_adapted(bad, np.random.default_rng(0), n=5)


# ---------------------------------------------------------------------------
# sprays


def test_spray_matches_group_exponential(so3_groupoid, rng):
    sp = spray_extension(so3_groupoid, steps=64)
    for _ in range(5):
        W = np.asarray(so3_groupoid.group.random_algebra(rng),
                       dtype=float) * 0.5
        got = np.asarray(sp.apply(so3_groupoid.unit(None), W.ravel()),
                         dtype=float)
        want = np.asarray(expm_series(np.asarray(W, dtype=object)),
                          dtype=float)
        assert np.max(np.abs(got - want)) < 1e-8


def test_spray_homogeneity(so3_groupoid, rng):
    """F(s·v) integrates in time 1 to the same point as F(v) in time s."""
    sp = spray_extension(so3_groupoid, steps=64)
    g = so3_groupoid.group.random_element(rng)
    v = (np.asarray(g) @ so3_groupoid.group.random_algebra(rng)).ravel()
    for s in (0.5, 0.3):
        a = np.asarray(sp.spray_exp(g, s * v, 1.0), dtype=float)
        b = np.asarray(sp.spray_exp(g, v, s), dtype=float)
        assert np.max(np.abs(a - b)) < 1e-8


def test_spray_on_pair_groupoid(pair, rng):
    sp = spray_extension(pair, steps=16)
    g = pair.random_element(rng)
    v = rng.normal(0.0, 0.3, 2)
    got = np.asarray(sp.apply(g, v), dtype=float)
    assert np.max(np.abs(got - (np.asarray(g, dtype=float) + v))) < 1e-12


def test_spray_unsupported_groupoid(gauge_linear):
    with pytest.raises(ValueError):
        spray_extension(gauge_linear)


# ---------------------------------------------------------------------------
# flip addition on the tangent prolongation


def test_flip_zero_vector_is_identity(so3_addition, rng):
    Af = flip_addition(so3_addition)
    TG = Af.G
    el = TG.random_element(rng)
    out = Af.apply(el, np.zeros(TG.coord_dim))
    assert TG.element_dist(out, el) == 0.0


def test_flip_roundtrip(so3_addition, rng):
    Af = flip_addition(so3_addition)
    assert roundtrip_residual(Af, rng, n=5, scale=0.05) < 1e-9


def test_flip_projects_to_base_addition(so3_addition, rng):
    """The arrow component of the flip addition is the original
    addition applied to the arrow component."""
    Af = flip_addition(so3_addition)
    G = so3_addition.G
    TG = Af.G
    el = TG.random_element(rng)
    w = rng.normal(0.0, 0.1, TG.coord_dim)
    out = Af.apply(el, w)
    want = so3_addition.apply(el.g, w[:G.coord_dim])
    assert G.element_dist(out.g, want) < 1e-13


def test_group_addition_guess_seeds_newton(so3_groupoid, rng):
    """For true tangent data the closed-form seed is exact."""
    A = group_addition(so3_groupoid)
    g = so3_groupoid.group.random_element(rng)
    v = (np.asarray(g) @ so3_groupoid.group.random_algebra(rng, 0.3)).ravel()
    h = A.apply(g, v)
    seed = np.array([value(c) for c in A._guess(g, h)], dtype=float)
    assert np.max(np.abs(seed - v)) < 1e-12
