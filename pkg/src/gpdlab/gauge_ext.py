"""The gauge-groupoid extension of the circle diffeomorphisms.

The bisection group of a gauge groupoid sits in an extension: the
kernel consists of gauge transformations (bisections fixing every base
point), the quotient is the image of the base-projection homomorphism
beta_*.  This module realizes the constructive half: a near-identity
circle diffeomorphism is factored through a partition of unity into
pieces supported in single trivializing arcs, each piece lifts to a
bisection with identity fiber component, and the star-product of the
lifts is a section of beta_*.  Membership classification extracts the
fiber-valued data of kernel elements.
"""

from __future__ import annotations

import math

import numpy as np

from . import dual as dm
from .dual import value
from .additions import LocalAddition
from .bisections import (Bisection, CircleDiffeo, NotABisectionError,
                         identity_diffeo, star, unit_bisection)
from .groupoids import GaugeArrow, GaugeGroupoid, PairGroupoid
from .manifolds import OutOfChartError
from .numerics import NotADiffeomorphismError, PartitionOfUnity

TWO_PI = 2.0 * math.pi


class DecompositionError(RuntimeError):
    pass


class SupportError(ValueError):
    pass


def _phi_id(f: CircleDiffeo, A_M: LocalAddition):
    """Read a circle diffeomorphism through the chart at the identity
    bisection of the pair groupoid: x -> tangent coordinates v(x) with
    A_M(1_x, v(x)) = (f(x), x)."""
    G = A_M.G

    def field(x):
        u = G.unit(np.atleast_1d(x))
        return A_M.invert(u, np.array([f(x), x], dtype=object))

    return field


def _phi_id_inverse(field, A_M: LocalAddition, grid_n=64, check=True):
    """The inverse chart map: a displacement field back to a circle
    diffeomorphism (the target component of the resulting bisection)."""
    G = A_M.G

    def lift(x):
        u = G.unit(np.atleast_1d(x))
        g = A_M.apply(u, field(x))
        t = np.asarray(g)[0]
        return x + dm.wrap_pm_pi(t - x)

    return CircleDiffeo(lift, grid_n=grid_n, check=check)


def near_identity_residuals(f: CircleDiffeo, n=128):
    """(max displacement, min slope): the quantified chart condition."""
    xs = np.linspace(0.0, TWO_PI, n, endpoint=False)
    disp = max(abs(dm.wrap_pm_pi(f(float(x)) - float(x))) for x in xs)
    return disp, f.min_slope


def decompose_diffeo(f: CircleDiffeo, pou: PartitionOfUnity,
                     A_M: LocalAddition, grid_n=64):
    """Telescoping factorization f = s_1 ∘ ... ∘ s_n with each s_i equal
    to the identity outside the support of the i-th bump.

    s_i = [phi^{-1}(mu_{i-1}·phi(f))]^{-1} ∘ phi^{-1}(mu_i·phi(f))
    where mu_i is the partial sum of the first i bump weights.
    """
    disp, slope = near_identity_residuals(f)
    if disp >= 0.5 * math.pi:
        raise OutOfChartError(
            f"diffeo displacement {disp:.3f} outside the identity chart")
    phi = _phi_id(f, A_M)
    n = len(pou)

    def partial(i):
        if i == 0:
            return identity_diffeo(grid_n)
        if i == n:
            return f

        def field(x):
            return pou.partial_sum(i, x) * np.asarray(phi(x), dtype=object)

        try:
            return _phi_id_inverse(field, A_M, grid_n=grid_n)
        except NotADiffeomorphismError as exc:
            raise DecompositionError(
                f"partial factor {i} is not a diffeomorphism: {exc}") from exc

    partials = [partial(i) for i in range(n + 1)]
    return [partials[i].inverse().compose(partials[i + 1])
            for i in range(n)]


def check_supports(factors, pou: PartitionOfUnity, n=256):
    """Max displacement of each factor outside its bump's support."""
    xs = np.linspace(0.0, TWO_PI, n, endpoint=False)
    worst = 0.0
    for i, s in enumerate(factors):
        bump = pou._bumps[i]
        for x in xs:
            if bump(float(x)) < 1e-300:
                worst = max(worst,
                            abs(dm.wrap_pm_pi(s(float(x)) - float(x))))
    return worst


def lift_factor(GG: GaugeGroupoid, i: int, s: CircleDiffeo, grid_n=64,
                tol=1e-10):
    """Lift a diffeomorphism supported in arc i to a bisection of the
    gauge groupoid: over the support the arrow (i, i, s(x), x, e),
    elsewhere the unit arrow.  The two expressions glue because s is
    the identity wherever the chart-i expression stops being available.
    """
    bundle = GG.bundle
    xs = np.linspace(0.0, TWO_PI, 256, endpoint=False)
    for x in xs:
        if not bundle.chart_contains(i, x, margin=1e-3):
            d = abs(dm.wrap_pm_pi(s(float(x)) - float(x)))
            if d > tol:
                raise SupportError(
                    f"diffeo moves x={x:.3f} outside arc {i} by {d:.3g}")
    e = bundle.group.identity

    def section(x):
        moved = abs(dm.wrap_pm_pi(value(s(value(x))) - value(x))) > tol
        if moved or (bundle.chart_contains(i, x, margin=1e-6)
                     and bundle.chart_contains(i, value(s(value(x))),
                                               margin=1e-6)):
            y = x + dm.wrap_pm_pi(s(x) - x)
            return GaugeArrow(i, i, y, x + 0.0 * x, np.asarray(e))
        return GG.unit(np.atleast_1d(x))

    return Bisection(GG, section, grid_n=grid_n, check=False, beta_map=s)


def beta_star_image(sigma: Bisection):
    """beta_*(sigma): the underlying circle diffeomorphism."""
    return sigma.beta


def beta_star_section(GG: GaugeGroupoid, f: CircleDiffeo,
                      A_M: LocalAddition, grid_n=64):
    """The star-product of the chart-wise lifts of the telescoping
    factors: a bisection of the gauge groupoid with beta_*-image f."""
    factors = decompose_diffeo(f, GG.bundle.pou, A_M, grid_n=grid_n)
    out = None
    for i, s in enumerate(factors):
        lifted = lift_factor(GG, i, s, grid_n=grid_n)
        out = lifted if out is None else star(out, lifted)
    return out if out is not None else unit_bisection(GG, grid_n=grid_n)


def extension_membership(sigma: Bisection, tol=1e-10, n=64):
    """Classify a gauge-groupoid bisection within the extension.

    Returns a dict with ``kind`` ("kernel" for gauge transformations,
    "general" otherwise), the beta_*-displacement, and — for kernel
    elements — the H-valued chart functions ``cocycle[i]`` defined on
    the arcs."""
    GG = sigma.G
    bundle = GG.bundle
    xs = np.linspace(0.0, TWO_PI, n, endpoint=False)
    disp = max(abs(dm.wrap_pm_pi(sigma.beta(float(x)) - float(x)))
               for x in xs)
    report = {"beta_displacement": float(disp)}
    if disp > tol:
        report["kind"] = "general"
        return report
    report["kind"] = "kernel"

    def chart_fn(i):
        def h(x):
            g = sigma.section(x)
            g = GG.chart_change(g, i, i)
            return np.asarray(g.h)

        return h

    report["cocycle"] = {i: chart_fn(i) for i in range(bundle.n_charts)}
    return report


def kernel_closure_residual(GG: GaugeGroupoid, sigmas, tol=1e-10, n=32):
    """Star-products of kernel elements must stay in the kernel: max
    beta_*-displacement over all pairwise products."""
    worst = 0.0
    for a in sigmas:
        for b in sigmas:
            prod = star(a, b)
            worst = max(worst, extension_membership(
                prod, tol=math.inf, n=n)["beta_displacement"])
    return worst


def gauge_transformation(GG: GaugeGroupoid, chart_fns, grid_n=64):
    """Build a kernel bisection from H-valued chart functions that
    transform by conjugation across overlaps: sigma(x) = (i, i, x, x,
    h_i(x)) in the preferred chart."""
    bundle = GG.bundle

    def section(x):
        i = bundle.preferred_chart(value(x))
        return GaugeArrow(i, i, x + 0.0 * x, x + 0.0 * x,
                          np.asarray(chart_fns[i](x)))

    return Bisection(GG, section, grid_n=grid_n, check=False,
                     beta_map=identity_diffeo(grid_n))


def conjugation_law_residual(GG: GaugeGroupoid, report, n=32):
    """For a kernel element: across each overlap the chart functions
    must be conjugate by the transition function,
    h_i(x) = k_ij(x) h_j(x) k_ij(x)^{-1}."""
    from .manifolds import mat_inv

    bundle = GG.bundle
    worst = 0.0
    cocycle = report["cocycle"]
    xs = np.linspace(0.0, TWO_PI, n, endpoint=False)
    for x in xs:
        charts = bundle.charts_at(float(x))
        for i in charts:
            for j in charts:
                if i == j:
                    continue
                k = np.asarray(bundle.transition(i, j, float(x)),
                               dtype=float)
                hi = np.asarray(cocycle[i](float(x)), dtype=float)
                hj = np.asarray(cocycle[j](float(x)), dtype=float)
                worst = max(worst, float(np.max(np.abs(
                    hi - k @ hj @ mat_inv(k)))))
    return worst
