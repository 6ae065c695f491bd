"""Finite-dimensional Lie groupoids over compact bases.

Concrete instances:

* :class:`PairGroupoid` over a flat torus — arrows are ordered pairs
  (target, source).
* :class:`GroupOverPoint` — a matrix group viewed as a groupoid over the
  one-point base.
* :class:`GroupBundle` — a trivial bundle of groups over the circle.
* :class:`GaugeGroupoid` of a two-chart principal bundle over the
  circle, with arrows stored in chart form.
* :class:`TangentGroupoid` — the tangent prolongation of any of the
  above, with all structure maps obtained by dual-number pushes.

All structure maps accept dual-valued coordinates, which is what makes
the tangent prolongation (and every derivative elsewhere in the
package) a few lines instead of a calculus exercise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import dual as dm
from .dual import Dual, deriv, primal, value
from . import manifolds as mf
from .manifolds import OutOfChartError, Point, Torus, mat_inv
from .numerics import PartitionOfUnity

TWO_PI = 2.0 * math.pi

COMPOSE_TOL = 1e-8


class ComposabilityError(ValueError):
    """Raised when source(g) and target(h) disagree in compose(g, h)."""


# ---------------------------------------------------------------------------
# abstract interface


class Groupoid:
    """Common interface.

    Arrows compose right-to-left: ``compose(g, h)`` is defined when
    ``source(g) == target(h)`` and is the arrow "h then g".
    """

    base = None  # manifold of objects
    coord_dim = 0

    # --- structure maps ---------------------------------------------------
    def source(self, g):
        raise NotImplementedError

    def target(self, g):
        raise NotImplementedError

    def unit(self, x):
        raise NotImplementedError

    def compose(self, g, h):
        raise NotImplementedError

    def inv(self, g):
        raise NotImplementedError

    # --- coordinates ------------------------------------------------------
    def to_coords(self, g):
        """Flat coordinate array of an arrow (chart data, if any, is
        carried separately by the element)."""
        raise NotImplementedError

    def from_coords(self, c, like=None):
        raise NotImplementedError

    def angle_mask(self):
        """Boolean array marking which coordinates are angles (compared
        modulo 2pi)."""
        return np.zeros(self.coord_dim, dtype=bool)

    def align(self, g, like):
        """Re-express g in the same chart as ``like`` (identity for
        groupoids with global coordinates)."""
        return g

    # --- sampling ---------------------------------------------------------
    def random_base(self, rng):
        return self.base.random_point(rng)

    def random_element(self, rng):
        return self.random_family(rng)(0.0)

    def random_family(self, rng, source_curve=None):
        """A smooth one-parameter family of arrows t -> g(t), evaluable
        at dual t.  If ``source_curve`` is given, source(g(t)) follows
        it exactly."""
        raise NotImplementedError

    def random_arrow_with_target(self, rng, x):
        curve = _constant_curve(x)
        return self.inv(self.random_family(rng, source_curve=curve)(0.0))

    # --- metrics ----------------------------------------------------------
    def element_dist(self, g, h):
        try:
            h = self.align(h, g)
        except OutOfChartError:
            return math.inf
        a = _values(self.to_coords(g))
        b = _values(self.to_coords(h))
        mask = self.angle_mask()
        out = 0.0
        for ai, bi, ang in zip(a, b, mask):
            d = abs(dm.wrap_pm_pi(ai - bi)) if ang else abs(ai - bi)
            out = max(out, d)
        return out

    def _check_composable(self, g, h):
        d = self.base.dist(_values(self.source(g)), _values(self.target(h)))
        if d > COMPOSE_TOL:
            raise ComposabilityError(
                f"source/target mismatch of size {d:.3g} in compose()")


def _values(arr):
    return np.array([value(c) for c in np.atleast_1d(np.asarray(arr, dtype=object))],
                    dtype=float)


def _constant_curve(x):
    x = np.atleast_1d(np.asarray(x, dtype=object))

    def curve(t):
        return x + 0.0 * t

    return curve


def _linear_curve(x, v):
    x = np.atleast_1d(np.asarray(x, dtype=object))
    v = np.atleast_1d(np.asarray(v, dtype=object))

    def curve(t):
        return x + t * v

    return curve


# ---------------------------------------------------------------------------
# pair groupoid


class PairGroupoid(Groupoid):
    """Arrows are pairs (y, x): one arrow from x to y for every pair of
    points.  Stored as the concatenation [y, x]."""

    def __init__(self, base=None):
        self.base = base if base is not None else Torus(1)
        self.d = self.base.dim
        self.coord_dim = 2 * self.d

    def source(self, g):
        return np.asarray(g)[self.d:]

    def target(self, g):
        return np.asarray(g)[: self.d]

    def unit(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=object))
        return np.concatenate([x, x])

    def compose(self, g, h):
        self._check_composable(g, h)
        return np.concatenate([self.target(g), self.source(h)])

    def inv(self, g):
        return np.concatenate([self.source(g), self.target(g)])

    def to_coords(self, g):
        return np.asarray(g)

    def from_coords(self, c, like=None):
        return np.asarray(c)

    def angle_mask(self):
        return np.ones(self.coord_dim, dtype=bool)

    def random_family(self, rng, source_curve=None):
        if source_curve is None:
            source_curve = _linear_curve(self.random_base(rng),
                                         rng.normal(0.0, 1.0, self.d))
        tgt = _linear_curve(self.random_base(rng), rng.normal(0.0, 1.0, self.d))

        def family(t):
            return np.concatenate([tgt(t), np.atleast_1d(source_curve(t))])

        return family


# ---------------------------------------------------------------------------
# group over a point


class GroupOverPoint(Groupoid):
    """A matrix group as a groupoid over the one-point base."""

    def __init__(self, group):
        self.group = group
        self.base = Point()
        self.n = group.n
        self.coord_dim = self.n * self.n

    def source(self, g):
        return np.zeros(0)

    target = source

    def unit(self, x):
        return self.group.identity

    def compose(self, g, h):
        return np.asarray(g) @ np.asarray(h)

    def inv(self, g):
        return mat_inv(g)

    def to_coords(self, g):
        return np.asarray(g).ravel()

    def from_coords(self, c, like=None):
        return np.asarray(c).reshape(self.n, self.n)

    def random_family(self, rng, source_curve=None):
        g0 = self.group.random_element(rng)
        W = self.group.random_algebra(rng)

        def family(t):
            return g0 @ self.group.exp(t * np.asarray(W, dtype=object))

        return family


# ---------------------------------------------------------------------------
# trivial group bundle


@dataclass
class BundleArrow:
    """Arrow of a bundle of groups: a fiber element h sitting over x."""
    x: object
    h: object


class GroupBundle(Groupoid):
    """Trivial bundle of groups over the circle: source = target, and
    arrows over the same point multiply in the fiber."""

    def __init__(self, group, base=None):
        self.group = group
        self.base = base if base is not None else Torus(1)
        self.d = self.base.dim
        self.n = group.n
        self.coord_dim = self.d + self.n * self.n

    def source(self, g):
        return np.atleast_1d(g.x)

    target = source

    def unit(self, x):
        return BundleArrow(np.atleast_1d(np.asarray(x, dtype=object)),
                           self.group.identity)

    def compose(self, g, h):
        self._check_composable(g, h)
        return BundleArrow(g.x, np.asarray(g.h) @ np.asarray(h.h))

    def inv(self, g):
        return BundleArrow(g.x, mat_inv(g.h))

    def to_coords(self, g):
        return np.concatenate([np.atleast_1d(np.asarray(g.x, dtype=object)),
                               np.asarray(g.h, dtype=object).ravel()])

    def from_coords(self, c, like=None):
        c = np.asarray(c)
        return BundleArrow(c[: self.d], c[self.d:].reshape(self.n, self.n))

    def angle_mask(self):
        m = np.zeros(self.coord_dim, dtype=bool)
        m[: self.d] = True
        return m

    def random_family(self, rng, source_curve=None):
        if source_curve is None:
            source_curve = _linear_curve(self.random_base(rng),
                                         rng.normal(0.0, 1.0, self.d))
        h0 = self.group.random_element(rng)
        W = self.group.random_algebra(rng)

        def family(t):
            return BundleArrow(np.atleast_1d(source_curve(t)),
                               h0 @ self.group.exp(t * np.asarray(W, dtype=object)))

        return family


# ---------------------------------------------------------------------------
# principal bundle and its gauge groupoid


def default_cocycle(group):
    """A smooth H-valued transition function on the circle.

    Takes values in a one-parameter subgroup, so the induced connection
    forms commute and parallel transport reduces to a quadrature."""
    B = group.algebra_basis()[-1]

    def k01(x):
        c = 0.4 * dm.sin(x) + 0.2 * dm.cos(2.0 * x)
        return group.exp(c * np.asarray(B, dtype=object))

    return k01


def linear_cocycle(group):
    """k(x) = exp(x·B) for the last basis element B — the reference
    nontrivial cocycle.  Well-defined on the circle whenever exp(2π·B)
    is the identity (true for a rotation generator)."""
    B = group.algebra_basis()[-1]

    def k01(x):
        return group.exp(x * np.asarray(B, dtype=object))

    return k01


class PrincipalBundle:
    """A principal H-bundle over the circle given by two overlapping
    arcs and one transition function.

    The bundle is presented purely in cocycle form: local
    trivialisations over the arcs U_0, U_1 glued along k_01.  The arcs
    are intervals on the lift whose images cover the circle.
    """

    def __init__(self, group, arcs=None, cocycle=None):
        self.group = group
        if arcs is None:
            arcs = [(-0.7, math.pi + 0.7), (math.pi - 0.7, TWO_PI + 0.7)]
        self.arcs = [tuple(map(float, a)) for a in arcs]
        self.n_charts = len(self.arcs)
        if cocycle is None:
            cocycle = default_cocycle(group)
        if callable(cocycle):
            cocycle = {(0, 1): cocycle}
        self._cocycle = dict(cocycle)
        self.pou = PartitionOfUnity(self.arcs)
        self._commutes = None
        self._conn_fit = {}
        self._conn_antideriv = {}

    @property
    def base(self):
        return Torus(1)

    def chart_contains(self, i, x, margin=0.0):
        lo, hi = self.arcs[i]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return abs(dm.wrap_pm_pi(value(x) - mid)) < half - margin

    def charts_at(self, x):
        return [i for i in range(self.n_charts) if self.chart_contains(i, x)]

    def preferred_chart(self, x):
        ws = [self.pou.weight(i, value(x)) for i in range(self.n_charts)]
        return int(np.argmax(ws))

    def transition(self, i, j, x):
        """k_ij(x): the fiber element translating chart-j coordinates to
        chart-i coordinates over x.  Dual-capable in x."""
        if i == j:
            return self.group.identity
        if not (self.chart_contains(i, x) and self.chart_contains(j, x)):
            raise OutOfChartError(f"x={value(x):.4f} not in overlap U_{i} & U_{j}")
        if (i, j) in self._cocycle:
            return np.asarray(self._cocycle[(i, j)](x))
        return mat_inv(self._cocycle[(j, i)](x))

    def connection_form(self, i, x):
        """Local connection form A_i(x) (Lie-algebra valued, the dx
        coefficient), patched together with the partition of unity:
        A_i = sum_l lambda_l k_li^{-1} dk_li.  Once the chart has been
        fitted (see :meth:`_antiderivative`), served from the Chebyshev
        interpolant."""
        if i in self._conn_fit:
            return self._conn_fit[i](self._chart_lift(i, x))
        n = self.group.n
        out = np.zeros((n, n)) if not isinstance(x, Dual) else np.array(
            [[0.0] * n for _ in range(n)], dtype=object)
        xd = Dual(x, 1.0)
        for l in range(self.n_charts):
            if l == i or not self.chart_contains(l, x):
                continue
            w = self.pou.weight(l, x)
            if abs(value(w)) < 1e-15:
                continue
            Kd = np.asarray(self.transition(l, i, xd))
            K = np.array([[primal(c) for c in row] for row in Kd], dtype=object)
            dK = np.array([[deriv(c) for c in row] for row in Kd], dtype=object)
            out = out + w * (mat_inv(K) @ dK)
        return out

    @property
    def connection_commutes(self):
        """True when all connection-form values commute, so parallel
        transport is a plain (not path-ordered) exponential."""
        if self._commutes is None:
            samples = []
            for i in range(self.n_charts):
                lo, hi = self.arcs[i]
                for x in np.linspace(lo + 0.05, hi - 0.05, 7):
                    samples.append(np.asarray(self.connection_form(i, x), dtype=float))
            worst = max(np.max(np.abs(a @ b - b @ a))
                        for a in samples for b in samples)
            self._commutes = worst < 1e-12
        return self._commutes

    def _chart_lift(self, i, x):
        """Representative of x on the lift interval of arc i
        (derivative-transparent)."""
        lo, hi = self.arcs[i]
        mid = 0.5 * (lo + hi)
        return mid + dm.wrap_pm_pi(x - mid)

    def _antiderivative(self, i):
        """Entrywise Chebyshev antiderivative of A_i over arc i, fitted
        once and cached (only meaningful when the values commute)."""
        if i not in self._conn_antideriv:
            from .numerics import PiecewiseChebyshevMatrixField

            lo, hi = self.arcs[i]
            fit = PiecewiseChebyshevMatrixField.fit(
                lambda s: self.connection_form(i, s), lo, hi)
            err = fit.max_error(lambda s: self.connection_form(i, s))
            if err > 1e-11:
                raise RuntimeError(
                    f"connection interpolant for chart {i} too coarse "
                    f"(error {err:.3g})")
            self._conn_fit[i] = fit
            self._conn_antideriv[i] = fit.antiderivative()
        return self._conn_antideriv[i]

    def parallel_transport(self, i, x, v, steps=64):
        """Transport matrix for chart-i fiber coordinates along the
        path t -> x + t·v, t in [0,1]: the horizontal lift left-factor.
        Exact (antiderivative of the connection form) when the
        connection values commute, RK4 otherwise.  Dual-capable in x
        and v."""
        from .manifolds import expm_series

        n = self.group.n
        if self.connection_commutes:
            F = self._antiderivative(i)
            x0 = self._chart_lift(i, x)
            return expm_series(-(F(x0 + v) - F(x0)))
        from .numerics import IntegrationParams, rk4_solve

        def rhs(t, state):
            g = state.reshape(n, n)
            return (-(self.connection_form(i, x + t * v) * v) @ g).ravel()

        eye = np.array([[1.0 if a == b else 0.0 for b in range(n)]
                        for a in range(n)], dtype=object)
        path = rk4_solve(rhs, eye.ravel(), IntegrationParams(steps=steps))
        return path[-1].reshape(n, n)


@dataclass
class GaugeArrow:
    """Chart presentation of a gauge-groupoid arrow from x to y: chart i
    holds the target, chart j the source, h the fiber component."""
    i: int
    j: int
    y: object
    x: object
    h: object


class GaugeGroupoid(Groupoid):
    """Gauge groupoid of a principal bundle, with arrows in chart form.

    Composition concatenates fiber components through the transition
    function at the middle point; changing charts conjugates the fiber
    component by transition values at the two endpoints.
    """

    def __init__(self, bundle: PrincipalBundle):
        self.bundle = bundle
        self.group = bundle.group
        self.base = bundle.base
        self.n = self.group.n
        self.coord_dim = 2 + self.n * self.n

    def source(self, g):
        return np.atleast_1d(g.x)

    def target(self, g):
        return np.atleast_1d(g.y)

    def unit(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=object))[0]
        i = self.bundle.preferred_chart(x)
        return GaugeArrow(i, i, x, x, self.group.identity)

    def compose(self, g, h):
        self._check_composable(g, h)
        # the middle point in g's source chart and h's target chart
        K = self.bundle.transition(g.j, h.i, g.x)
        return GaugeArrow(g.i, h.j, g.y, h.x,
                          np.asarray(g.h) @ K @ np.asarray(h.h))

    def inv(self, g):
        return GaugeArrow(g.j, g.i, g.x, g.y, mat_inv(g.h))

    def chart_change(self, g, m, n):
        """Re-present g with target chart m and source chart n."""
        if m == g.i and n == g.j:
            return g
        Ky = self.bundle.transition(m, g.i, g.y)
        Kx = self.bundle.transition(n, g.j, g.x)
        return GaugeArrow(m, n, g.y, g.x, Ky @ np.asarray(g.h) @ mat_inv(Kx))

    def align(self, g, like):
        return self.chart_change(g, like.i, like.j)

    def to_coords(self, g):
        return np.concatenate([[g.y], [g.x],
                               np.asarray(g.h, dtype=object).ravel()])

    def from_coords(self, c, like=None):
        if like is None:
            raise ValueError("gauge coordinates need chart data (pass like=)")
        c = np.asarray(c)
        return GaugeArrow(like.i, like.j, c[0], c[1],
                          c[2:].reshape(self.n, self.n))

    def angle_mask(self):
        m = np.zeros(self.coord_dim, dtype=bool)
        m[:2] = True
        return m

    def random_family(self, rng, source_curve=None):
        if source_curve is None:
            source_curve = _linear_curve([rng.uniform(0.0, TWO_PI)],
                                         [rng.normal()])
        x0 = value(np.atleast_1d(source_curve(0.0))[0])
        y0 = rng.uniform(0.0, TWO_PI)
        vy = rng.normal()
        i = self.bundle.preferred_chart(y0)
        j = self.bundle.preferred_chart(x0)
        h0 = self.group.random_element(rng)
        W = self.group.random_algebra(rng)

        def family(t):
            return GaugeArrow(i, j, y0 + t * vy,
                              np.atleast_1d(source_curve(t))[0],
                              h0 @ self.group.exp(t * np.asarray(W, dtype=object)))

        return family


# ---------------------------------------------------------------------------
# tangent prolongation


class TangentBundleManifold:
    """Base manifold of a tangent groupoid: points are (x, v) pairs
    stored concatenated."""

    def __init__(self, inner):
        self.inner = inner
        self.d = inner.dim
        self.dim = 2 * inner.dim

    def wrap(self, xv):
        xv = np.atleast_1d(xv)
        return np.concatenate([self.inner.wrap(xv[: self.d]), xv[self.d:]])

    def dist(self, a, b):
        a, b = np.atleast_1d(a), np.atleast_1d(b)
        if self.d == 0:
            return 0.0
        db = self.inner.dist(a[: self.d], b[: self.d])
        return max(db, float(np.max(np.abs(a[self.d:] - b[self.d:]))))

    def random_point(self, rng):
        return np.concatenate([self.inner.random_point(rng),
                               rng.normal(0.0, 1.0, self.d)])


@dataclass
class TangentArrow:
    """An arrow of TG: an arrow g of G together with a tangent vector,
    stored in the coordinates of g's chart."""
    g: object
    v: object  # array, len coord_dim of the underlying groupoid

    def primal_arrow(self):
        return self.g


class TangentGroupoid(Groupoid):
    """Tangent prolongation: apply all structure maps of G to
    dual-number coordinates and read off value and derivative parts."""

    def __init__(self, G: Groupoid):
        self.G = G
        self.base = TangentBundleManifold(G.base)
        self.coord_dim = 2 * G.coord_dim

    # --- dual packing -----------------------------------------------------
    def _pack(self, el: TangentArrow):
        c = self.G.to_coords(el.g)
        cd = np.array([Dual(ci, vi) for ci, vi in zip(c, el.v)], dtype=object)
        return self.G.from_coords(cd, like=el.g)

    def _unpack(self, gd):
        cd = self.G.to_coords(gd)
        c = np.array([primal(ci) for ci in cd], dtype=object)
        v = np.array([deriv(ci) for ci in cd], dtype=object)
        return TangentArrow(self.G.from_coords(c, like=gd), v)

    @staticmethod
    def _split_base(xd):
        xd = np.atleast_1d(xd)
        return np.concatenate([[primal(c) for c in xd],
                               [deriv(c) for c in xd]])

    # --- structure maps ---------------------------------------------------
    def source(self, el):
        return self._split_base(self.G.source(self._pack(el)))

    def target(self, el):
        return self._split_base(self.G.target(self._pack(el)))

    def unit(self, xv):
        xv = np.atleast_1d(xv)
        d = self.base.d
        xd = np.array([Dual(x, v) for x, v in zip(xv[:d], xv[d:])], dtype=object)
        return self._unpack(self.G.unit(xd))

    def compose(self, a, b):
        return self._unpack(self.G.compose(self._pack(a), self._pack(b)))

    def inv(self, a):
        return self._unpack(self.G.inv(self._pack(a)))

    # --- coordinates ------------------------------------------------------
    def to_coords(self, el):
        return np.concatenate([np.asarray(self.G.to_coords(el.g), dtype=object),
                               np.asarray(el.v, dtype=object)])

    def from_coords(self, c, like=None):
        n = self.G.coord_dim
        g = self.G.from_coords(np.asarray(c)[:n],
                               like=like.g if like is not None else None)
        return TangentArrow(g, np.asarray(c)[n:])

    def angle_mask(self):
        m = np.zeros(self.coord_dim, dtype=bool)
        m[: self.G.coord_dim] = self.G.angle_mask()
        return m

    def align(self, el, like):
        gd = self.G.align(self._pack(el), like.g)
        return self._unpack(gd)

    # --- sampling ---------------------------------------------------------
    def random_element(self, rng):
        fam = self.G.random_family(rng)
        return self._unpack(fam(Dual(0.0, 1.0)))

    def random_arrow_with_target(self, rng, xv):
        xv = np.atleast_1d(xv)
        d = self.base.d
        fam = self.G.random_family(rng, source_curve=_linear_curve(xv[:d], xv[d:]))
        return self.inv(self._unpack(fam(Dual(0.0, 1.0))))

    def random_family(self, rng, source_curve=None):
        raise NotImplementedError("second tangent prolongations not supported")


# ---------------------------------------------------------------------------
# axiom checker


def check_axioms(G: Groupoid, rng=None, n=12, tol=1e-9):
    """Numerically verify the groupoid axioms on random data.

    Returns a dict of named maximal residuals (plus ``"max"``); raises
    AssertionError when the worst residual exceeds tol.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    res = {k: 0.0 for k in
           ("unit_left", "unit_right", "inverse_left", "inverse_right",
            "source_target", "compose_source", "compose_target", "associativity")}
    for _ in range(n):
        g = G.random_element(rng)
        x, y = G.source(g), G.target(g)
        res["unit_right"] = max(res["unit_right"],
                                G.element_dist(G.compose(g, G.unit(x)), g))
        res["unit_left"] = max(res["unit_left"],
                               G.element_dist(G.compose(G.unit(y), g), g))
        res["inverse_left"] = max(res["inverse_left"],
                                  G.element_dist(G.compose(G.inv(g), g), G.unit(x)))
        res["inverse_right"] = max(res["inverse_right"],
                                   G.element_dist(G.compose(g, G.inv(g)), G.unit(y)))
        res["source_target"] = max(
            res["source_target"],
            G.base.dist(_values(G.source(G.inv(g))), _values(y)))
        h = G.random_arrow_with_target(rng, x)
        k = G.random_arrow_with_target(rng, G.source(h))
        gh = G.compose(g, h)
        res["compose_source"] = max(
            res["compose_source"],
            G.base.dist(_values(G.source(gh)), _values(G.source(h))))
        res["compose_target"] = max(
            res["compose_target"],
            G.base.dist(_values(G.target(gh)), _values(y)))
        res["associativity"] = max(
            res["associativity"],
            G.element_dist(G.compose(gh, k), G.compose(g, G.compose(h, k))))
    res["max"] = max(res.values())
    if res["max"] > tol:
        bad = {k: v for k, v in res.items() if v > tol and k != "max"}
        raise AssertionError(f"groupoid axioms violated: {bad}")
    return res
