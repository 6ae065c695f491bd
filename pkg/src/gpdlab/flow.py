"""Right-invariant flows on groupoid arrows and the evolution map.

A time-dependent algebroid section spreads to a time-dependent vector
field on the arrows through right translation; its flow preserves the
source fibers, is a cocycle in time, commutes with right translations,
and — applied to the units — produces a path of bisections starting at
the identity: the product integral.  Every one of those statements is a
numeric check in this module.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import dual as dm
from .dual import Dual, value
from .algebroid import AlgebroidSection, right_invariant_extension
from .bisections import Bisection, is_bisection, unit_bisection
from .groupoids import GaugeArrow, GaugeGroupoid, Groupoid, _values
from .numerics import IntegrationDivergedError, IntegrationParams

TWO_PI = 2.0 * math.pi


class EtaTooLargeError(RuntimeError):
    """A time slice of the evolution failed the bisection test."""


class TimeDependentSection:
    """eta(t, x): a continuous curve of algebroid sections on [0, 1].

    ``fn(t, x)`` must be dual-evaluable in x; t is always a plain
    float.
    """

    def __init__(self, G: Groupoid, fn, name="eta"):
        self.G = G
        self.fn = fn
        self.name = name

    @classmethod
    def constant(cls, X: AlgebroidSection):
        return cls(X.G, lambda t, x: X(x), name=f"const({X.name})")

    @classmethod
    def from_samples(cls, G, times, sections, name="eta-sampled"):
        """Linear interpolation between sampled sections (matches the
        C^0 regularity the theory asks for)."""
        times = np.asarray(times, dtype=float)

        def fn(t, x):
            k = int(np.clip(np.searchsorted(times, t) - 1, 0,
                            len(times) - 2))
            w = (t - times[k]) / (times[k + 1] - times[k])
            return ((1.0 - w) * np.asarray(sections[k](x), dtype=object)
                    + w * np.asarray(sections[k + 1](x), dtype=object))

        return cls(G, fn, name=name)

    def __call__(self, t, x):
        return np.asarray(self.fn(t, x), dtype=object)

    def section_at(self, t, grid_n=32, check=False):
        return AlgebroidSection(self.G, lambda x: self(t, x), grid_n=grid_n,
                                check=check, name=f"{self.name}({t:.3f})")

    def check_slices(self, times=(0.0, 0.5, 1.0)):
        """Verticality of every requested slice (the per-time section
        invariant)."""
        return max(self.section_at(t).verticality_residual() for t in times)


def ri_field(t, g, eta: TimeDependentSection):
    """f(t, g) = T(R_g)(eta(t, beta(g))): tangent coordinates at g."""
    return right_invariant_extension(eta.section_at(t), g)


# ---------------------------------------------------------------------------
# the flow


def _rebalance(G, g):
    """Chart switching for gauge arrows: when an endpoint leaves the
    middle two-thirds of its arc, re-express that leg in a chart that
    holds it comfortably.  The margin keeps a switched arrow well
    inside the new chart, so the policy has hysteresis and cannot
    thrash."""
    if not isinstance(G, GaugeGroupoid):
        return g
    bundle = G.bundle

    def better(i, p):
        sixth = (bundle.arcs[i][1] - bundle.arcs[i][0]) / 6.0
        if bundle.chart_contains(i, value(p), margin=sixth):
            return i
        for l in range(bundle.n_charts):
            if l != i and bundle.chart_contains(l, value(p), margin=sixth):
                return l
        return i

    ni, nj = better(g.i, g.y), better(g.j, g.x)
    if (ni, nj) == (g.i, g.j):
        return g
    return G.chart_change(g, ni, nj)


def flow(t0, t1, g0, eta: TimeDependentSection,
         params: IntegrationParams = None):
    """Integrate x'(t) = T(R_x)(eta(t, beta(x))) from g0 at t0 to t1
    with fixed-step RK4 in the arrow's chart coordinates, re-charting
    gauge arrows between steps as needed."""
    G = eta.G
    if params is None:
        params = IntegrationParams()
    steps = params.steps
    dt = (t1 - t0) / steps
    g = g0
    for n in range(steps):
        t = t0 + n * dt
        c0 = np.asarray(G.to_coords(g), dtype=object)

        def rhs(tt, c):
            arrow = G.from_coords(c, like=g)
            return ri_field(tt, arrow, eta)

        k1 = rhs(t, c0)
        k2 = rhs(t + dt / 2.0, c0 + (dt / 2.0) * k1)
        k3 = rhs(t + dt / 2.0, c0 + (dt / 2.0) * k2)
        k4 = rhs(t + dt, c0 + dt * k3)
        c = c0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(_values(c))):
            raise IntegrationDivergedError(n)
        g = _rebalance(G, G.from_coords(c, like=g))
    return g


def alpha_drift(G, g0, g1):
    """Distance between the source points of two arrows."""
    return G.base.dist(_values(G.source(g0)), _values(G.source(g1)))


# ---------------------------------------------------------------------------
# flow properties as residuals


def flow_properties_check(eta: TimeDependentSection, rng=None, samples=10,
                          params: IntegrationParams = None, grid_n=32):
    """Max residuals for the flow laws.

    * cocycle: two-leg integration 0 -> 1/3 -> 1 against one leg
      0 -> 1 (the uneven split keeps the RK4 grids from coinciding,
      which would make the law exact by construction)
    * equivariance: Fl(h)·g against Fl(h·g) on composable pairs
    * alpha invariance along every trajectory used
    * diffeo: the time-1 slice of the evolution passes the bisection
      test
    """
    G = eta.G
    if rng is None:
        rng = np.random.default_rng(0)
    if params is None:
        params = IntegrationParams(steps=100)
    half = IntegrationParams(steps=params.steps // 2, t0=params.t0,
                             t1=params.t1)
    report = {"cocycle": 0.0, "equivariance": 0.0, "alpha_invariance": 0.0}
    for _ in range(samples):
        h = G.random_element(rng)
        g = G.random_arrow_with_target(rng, G.source(h))
        one = flow(0.0, 1.0, h, eta, params)
        mid = flow(0.0, 1.0 / 3.0, h, eta, half)
        two = flow(1.0 / 3.0, 1.0, mid, eta, half)
        report["cocycle"] = max(report["cocycle"], G.element_dist(one, two))
        hg = G.compose(h, g)
        lhs = flow(0.0, 1.0, hg, eta, params)
        rhs = G.compose(one, g)
        report["equivariance"] = max(report["equivariance"],
                                     G.element_dist(lhs, rhs))
        for a, b in ((one, h), (lhs, hg)):
            report["alpha_invariance"] = max(report["alpha_invariance"],
                                             alpha_drift(G, a, b))
    ok, info = is_bisection(G, _slice_section(eta, 1.0, params), grid_n=grid_n)
    report["time1_is_bisection"] = bool(ok)
    report["max"] = max(v for k, v in report.items()
                        if isinstance(v, float))
    return report


# ---------------------------------------------------------------------------
# the evolution map (product integral)


def _slice_section(eta, t, params):
    """x -> Fl(0, t, 1_x): the time-t slice of the evolution, as a
    dual-evaluable section (the flow integrates object arrays, so dual
    base points ride through the whole trajectory)."""
    G = eta.G
    scaled = IntegrationParams(steps=max(2, int(params.steps * t)))

    def section(x):
        u = G.unit(np.atleast_1d(x) if G.base.dim else np.zeros(0))
        if t == 0.0:
            return u
        return flow(0.0, t, u, eta, scaled)

    return section


class BisectionPath:
    """The evolution t -> c_eta(t): bisections at a grid of times."""

    def __init__(self, eta, times, slices):
        self.eta = eta
        self.times = list(times)
        self.slices = list(slices)

    def __call__(self, t):
        k = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[k] - t) > 1e-12:
            raise KeyError(f"time {t} not on the stored grid")
        return self.slices[k]

    def export_csv(self, path):
        import csv

        G = self.eta.G
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x"] + [f"c{k}" for k in range(G.coord_dim)])
            for t, b in zip(self.times, self.slices):
                for x in np.atleast_1d(b.grid_points()):
                    g = b(float(x)) if G.base.dim else b(None)
                    w.writerow([t, float(np.atleast_1d(x)[0]) if G.base.dim
                                else 0.0]
                               + list(_values(G.to_coords(g))))


def evolve(eta: TimeDependentSection, params: IntegrationParams = None,
           n_slices=6, grid_n=32):
    """Integrate the unit bisection along eta, storing checked slices
    at n_slices times in [0, 1].  Every stored slice must pass the
    bisection test; the first failure aborts with the failing time."""
    G = eta.G
    if params is None:
        params = IntegrationParams(steps=120)
    times = np.linspace(0.0, 1.0, n_slices)
    slices = []
    for t in times:
        if t == 0.0:
            slices.append(unit_bisection(G, grid_n=grid_n))
            continue
        section = _slice_section(eta, float(t), params)
        try:
            slices.append(Bisection(G, section, grid_n=grid_n, check=True))
        except Exception as exc:
            raise EtaTooLargeError(
                f"time slice t={t:.3f} is not a bisection: {exc}") from exc
    return BisectionPath(eta, times, slices)


def product_integral_residual(eta: TimeDependentSection, path: BisectionPath,
                              fd=2.5e-3, params: IntegrationParams = None,
                              n_base=8, interior_only=True):
    """The defining ODE of the product integral, checked pointwise:
    central time-difference of the path against the right-invariant
    field at the current slice.  Returns the max residual."""
    G = eta.G
    if params is None:
        params = IntegrationParams(steps=120)
    pts = (np.linspace(0.0, TWO_PI, n_base, endpoint=False)
           if G.base.dim else [None])
    ts = [t for t in path.times if fd <= t <= 1.0 - fd] or [0.5]
    worst = 0.0
    for t in ts:
        plus = _slice_section(eta, t + fd, params)
        minus = _slice_section(eta, t - fd, params)
        here = path(t)
        for x in pts:
            g = here(x) if G.base.dim else here(None)
            gp = plus(x if G.base.dim else None)
            gm = minus(x if G.base.dim else None)
            cp = _values(G.to_coords(G.align(gp, g)))
            cm = _values(G.to_coords(G.align(gm, g)))
            dot = (cp - cm) / (2.0 * fd)
            mask = G.angle_mask()
            for k in range(G.coord_dim):
                if mask[k]:
                    dot[k] = (dm.wrap_pm_pi(cp[k] - cm[k])) / (2.0 * fd)
            want = _values(ri_field(t, g, eta))
            worst = max(worst, float(np.max(np.abs(dot - want))))
    return worst


def export_report(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, default=float)
