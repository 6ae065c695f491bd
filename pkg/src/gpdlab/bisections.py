"""The group of bisections of a Lie groupoid.

A bisection is a section σ of the source map whose composite with the
target map is a diffeomorphism of the base.  Bisections form a group
under (σ ⋆ τ)(x) = σ(target(τ(x))) · τ(x); for the pair groupoid of the
circle this group is (the identity component of) the circle
diffeomorphisms, which is the reference case throughout.

Bisections are stored as dual-evaluable closed-form callables plus a
cached grid form used for diagnostics, Newton inversion bootstraps, and
CSV export.
"""

from __future__ import annotations

import math

import numpy as np

from . import dual as dm
from .dual import Dual, value
from .groupoids import Groupoid, PairGroupoid, _values
from .numerics import (NotADiffeomorphismError, derivative,
                       invert_circle_diffeo)

TWO_PI = 2.0 * math.pi


class NotABisectionError(ValueError):
    pass


class CircleDiffeo:
    """An orientation-preserving circle diffeomorphism given by its
    degree-1 lift; supports composition, Newton inversion, and dual
    evaluation."""

    def __init__(self, lift, grid_n=64, check=True):
        self._lift = lift
        self.grid_n = grid_n
        xs = np.linspace(0.0, TWO_PI, grid_n, endpoint=False)
        self.grid_slopes = np.array([derivative(lift, float(x)) for x in xs])
        self.min_slope = float(self.grid_slopes.min())
        if check and self.min_slope <= 1e-8:
            raise NotADiffeomorphismError(
                f"lift not strictly increasing (min slope {self.min_slope:.3g})")

    def __call__(self, x):
        return self._lift(x)

    def deriv(self, x):
        return derivative(self._lift, x)

    def invert(self, y):
        return invert_circle_diffeo(self._lift, y, check_grid=0)

    def inverse(self):
        return CircleDiffeo(self.invert, grid_n=self.grid_n, check=False)

    def compose(self, other):
        return CircleDiffeo(lambda x: self._lift(other._lift(x)),
                            grid_n=self.grid_n, check=False)

    def sup_dist(self, other, n=128):
        xs = np.linspace(0.0, TWO_PI, n, endpoint=False)
        return max(abs(dm.wrap_pm_pi(self(float(x)) - other(float(x))))
                   for x in xs)


def identity_diffeo(grid_n=64):
    return CircleDiffeo(lambda x: x, grid_n=grid_n, check=False)


def random_fourier_diffeo(rng, modes=3, min_slope=0.5, grid_n=64):
    """x + trigonometric polynomial, rescaled until the slope bound
    holds."""
    a = rng.normal(0.0, 0.3, modes)
    b = rng.normal(0.0, 0.3, modes)
    shift = rng.uniform(0.0, TWO_PI)

    def disp(x):
        out = 0.0 * x + shift
        for k in range(modes):
            out = out + a[k] * dm.cos((k + 1) * x) + b[k] * dm.sin((k + 1) * x)
        return out

    scale = 1.0
    for _ in range(40):
        def lift(x, s=scale):
            return x + s * disp(x)
        xs = np.linspace(0.0, TWO_PI, 128, endpoint=False)
        worst = min(derivative(lift, float(x)) for x in xs)
        if worst > min_slope:
            return CircleDiffeo(lift, grid_n=grid_n)
        scale *= 0.7
    raise NotADiffeomorphismError("could not normalise random diffeo")


class Bisection:
    """A bisection with its cached target map.

    ``section(x)`` must accept dual scalars (x is a plain scalar for
    1-dimensional bases, the empty array for a point base).
    """

    def __init__(self, G: Groupoid, section, grid_n=64, check=True,
                 beta_map=None):
        self.G = G
        self.section = section
        self.grid_n = grid_n
        self.base_dim = G.base.dim
        if self.base_dim > 1:
            raise NotImplementedError("bisections are implemented over "
                                      "point and circle bases")
        if self.base_dim == 1:
            if beta_map is None:
                beta_map = CircleDiffeo(self._beta_lift, grid_n=grid_n,
                                        check=check)
            self.beta = beta_map
        else:
            self.beta = None
        if check:
            self._check_section()

    # -- evaluation --------------------------------------------------------
    def __call__(self, x):
        if self.base_dim == 0:
            return self.section(np.zeros(0))
        return self.section(x)

    def _beta_lift(self, x):
        g = self.section(x)
        t = np.atleast_1d(self.G.target(g))[0]
        # continuous degree-1 lift: wrap the displacement, not the value
        return x + dm.wrap_pm_pi(t - x)

    def _check_section(self, tol=1e-10):
        worst = 0.0
        for x in self.grid_points():
            g = self.section(x) if self.base_dim else self.section(np.zeros(0))
            s = _values(self.G.source(g))
            worst = max(worst, self.G.base.dist(s, np.atleast_1d(x)))
        if worst > tol:
            raise NotABisectionError(
                f"candidate is not a section of the source map "
                f"(residual {worst:.3g})")

    def grid_points(self):
        if self.base_dim == 0:
            return np.zeros((1, 0))
        return np.linspace(0.0, TWO_PI, self.grid_n, endpoint=False)

    # -- diagnostics -------------------------------------------------------
    def sup_dist(self, other, n=None):
        pts = self.grid_points() if n is None else np.linspace(
            0.0, TWO_PI, n, endpoint=False)
        return max(self.G.element_dist(self(float(x)) if self.base_dim else self(None),
                                       other(float(x)) if other.base_dim else other(None))
                   for x in np.atleast_1d(pts))

    def export_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + [f"c{k}" for k in range(self.G.coord_dim)])
            for x in np.atleast_1d(self.grid_points()):
                g = self(float(x)) if self.base_dim else self(None)
                w.writerow([float(np.atleast_1d(x)[0]) if self.base_dim else 0.0]
                           + [value(c) for c in self.G.to_coords(g)])


def unit_bisection(G: Groupoid, grid_n=64):
    if G.base.dim == 0:
        return Bisection(G, lambda x: G.unit(np.zeros(0)), grid_n=grid_n,
                         check=False)
    return Bisection(G, lambda x: G.unit(np.atleast_1d(x)), grid_n=grid_n,
                     check=False, beta_map=identity_diffeo(grid_n))


def constant_bisection(G, element, grid_n=64):
    """For a point base: the bisection picking one group element."""
    return Bisection(G, lambda x: element, grid_n=grid_n, check=False)


def bisection_from_diffeo(P: PairGroupoid, f: CircleDiffeo, grid_n=64):
    """On the pair groupoid of the circle, σ(x) = (f(x), x)."""

    def section(x):
        return np.array([f(x), x + 0.0 * x], dtype=object)

    return Bisection(P, section, grid_n=grid_n, check=False, beta_map=f)


# ---------------------------------------------------------------------------
# group operations


def star(sigma: Bisection, tau: Bisection, check=False):
    """(σ ⋆ τ)(x) = σ(target(τ(x))) · τ(x)."""
    G = sigma.G
    if sigma.base_dim == 0:
        return Bisection(G, lambda x: G.compose(sigma(None), tau(None)),
                         grid_n=sigma.grid_n, check=check)

    def section(x):
        t = tau.section(x)
        y = np.atleast_1d(G.target(t))[0]
        return G.compose(sigma.section(y), t)

    return Bisection(G, section, grid_n=sigma.grid_n, check=check,
                     beta_map=sigma.beta.compose(tau.beta))


def inverse(sigma: Bisection, check=False):
    """σ^{-1}(x) = inv(σ((β∘σ)^{-1}(x)))."""
    G = sigma.G
    if sigma.base_dim == 0:
        return Bisection(G, lambda x: G.inv(sigma(None)),
                         grid_n=sigma.grid_n, check=check)
    beta_inv = sigma.beta.inverse()

    def section(x):
        return G.inv(sigma.section(beta_inv(x)))

    return Bisection(G, section, grid_n=sigma.grid_n, check=check,
                     beta_map=beta_inv)


def act(sigma: Bisection, g):
    """Left translation by a bisection: g ↦ σ(target(g))·g."""
    G = sigma.G
    if sigma.base_dim == 0:
        return G.compose(sigma(None), g)
    y = np.atleast_1d(G.target(g))[0]
    return G.compose(sigma.section(y), g)


def is_bisection(G: Groupoid, section, grid_n=64):
    """Diffeomorphism test with diagnostics: (ok, info)."""
    try:
        b = Bisection(G, section, grid_n=grid_n, check=True)
    except (NotABisectionError, NotADiffeomorphismError) as exc:
        return False, {"reason": str(exc)}
    info = {"min_slope": b.beta.min_slope if b.beta is not None else 1.0}
    return True, info


# ---------------------------------------------------------------------------
# the chart around a bisection


class VerticalSection:
    """A section of the source-vertical tangent spaces along a
    bisection: x ↦ tangent coordinates at anchor(x)."""

    def __init__(self, anchor: Bisection, field):
        self.anchor = anchor
        self.field = field

    def __call__(self, x):
        return self.field(x)

    def verticality_residual(self, n=32):
        """max |T(source)(field(x))| over a grid, via a dual push."""
        G = self.anchor.G
        worst = 0.0
        pts = (np.linspace(0.0, TWO_PI, n, endpoint=False)
               if self.anchor.base_dim else [None])
        for x in pts:
            g = self.anchor(x)
            v = self.field(x)
            c = G.to_coords(g)
            gd = G.from_coords(
                np.array([Dual(ci, vi) for ci, vi in zip(c, v)], dtype=object),
                like=g)
            s = np.atleast_1d(G.source(gd))
            for comp in s:
                worst = max(worst, abs(dm.deriv(comp)))
        return worst


def chart_phi(anchor: Bisection, tau: Bisection, A):
    """Read τ through the canonical chart centred at ``anchor``: the
    vertical section v with A(anchor(x), v(x)) = τ(x), pointwise by
    Newton inversion of the local addition."""

    def field(x):
        return A.invert(anchor(x), tau(x))

    return VerticalSection(anchor, field)


def apply_chart(anchor: Bisection, vs: VerticalSection, A, check=False):
    """Inverse of chart_phi: push a vertical section through the local
    addition to get a bisection."""
    G = anchor.G

    def section(x):
        return A.apply(anchor(x) if anchor.base_dim else anchor(None),
                       vs.field(x))

    return Bisection(G, section, grid_n=anchor.grid_n, check=check)


# ---------------------------------------------------------------------------
# morphisms and pushforward


class Morphism:
    """A groupoid morphism over the identity on the base."""

    def __init__(self, src: Groupoid, dst: Groupoid, fn, name="morphism"):
        self.src = src
        self.dst = dst
        self.fn = fn
        self.name = name

    def __call__(self, g):
        return self.fn(g)


def identity_morphism(G):
    return Morphism(G, G, lambda g: g, name="id")


def anchor_morphism(GG, P: PairGroupoid):
    """Gauge groupoid -> pair groupoid: an arrow maps to the pair
    (target point, source point)."""

    def fn(g):
        return np.array([g.y, g.x], dtype=object)

    return Morphism(GG, P, fn, name="anchor")


def pushforward(f: Morphism, sigma: Bisection, check=True):
    """Bis(f): σ ↦ f∘σ."""
    if sigma.base_dim == 0:
        return Bisection(f.dst, lambda x: f(sigma(None)),
                         grid_n=sigma.grid_n, check=check)
    return Bisection(f.dst, lambda x: f(sigma.section(x)),
                     grid_n=sigma.grid_n, check=check)


def morphism_residual(f: Morphism, rng=None, n=50):
    """How far f is from a functor: compare f(g·h) with f(g)·f(h) and
    check unit preservation."""
    if rng is None:
        rng = np.random.default_rng(0)
    G, H = f.src, f.dst
    worst = 0.0
    for _ in range(n):
        g = G.random_element(rng)
        h = G.random_arrow_with_target(rng, G.source(g))
        worst = max(worst, H.element_dist(f(G.compose(g, h)),
                                          H.compose(f(g), f(h))))
        x = G.random_base(rng)
        worst = max(worst, H.element_dist(f(G.unit(x)), H.unit(x)))
    return worst
