"""Local additions on arrow manifolds.

A local addition is a map A: U ⊆ TN -> N with A(0_g) = g whose pairing
with the foot-point projection is a local diffeomorphism onto a
neighborhood of the diagonal — the chart generator for spaces of
sections.  "Adapted" additions additionally preserve the fibers of the
source (or target) map, which is what turns section spaces into
submanifolds.

Tangent vectors are passed as flat coordinate arrays in the arrow's
chart (see ``Groupoid.to_coords``); all additions evaluate on dual
scalars, so they can be differentiated in place.
"""

from __future__ import annotations

import math

import numpy as np

from . import dual as dm
from .dual import Dual, deriv, primal, value
from .groupoids import (GaugeArrow, GaugeGroupoid, GroupBundle, GroupOverPoint,
                        Groupoid, PairGroupoid, TangentArrow, TangentGroupoid)
from .manifolds import OutOfChartError, mat_inv
from .numerics import IntegrationParams, NewtonError, rk4_solve


class NotAdaptedError(AssertionError):
    pass


class LocalAddition:
    """A local addition on the arrows of a groupoid.

    ``apply(g, v)`` moves the arrow g along the tangent coordinates v;
    ``invert(g, h)`` solves apply(g, v) = h by Newton iteration.
    """

    def __init__(self, G: Groupoid, apply_fn, in_domain=None,
                 adapted_to=None, name="local-addition", guess_fn=None):
        self.G = G
        self._apply = apply_fn
        self._in_domain = in_domain
        self.adapted_to = adapted_to
        self.name = name
        # optional dual-capable closed-form seed for invert(); when it is
        # exact, Newton stops at the first residual check
        self._guess = guess_fn

    def in_domain(self, g, v):
        if self._in_domain is None:
            return True
        return self._in_domain(g, v)

    def apply(self, g, v):
        v = np.atleast_1d(np.asarray(v, dtype=object))
        if not self.in_domain(g, v):
            raise OutOfChartError(f"tangent vector outside the domain of {self.name}")
        return self._apply(g, v)

    def invert(self, g, h, tol=1e-12, max_iter=40):
        """Newton solve of apply(g, v) = h for v (chart coordinates of
        g).  This is the (foot-point x A)^{-1} chart map.

        Dual-valued inputs are handled by the implicit function theorem
        (solve on the primal part, then one linear solve for the
        derivative direction) — iterating Newton directly on mixed dual
        layers would confuse the perturbations.
        """
        G = self.G
        n = G.coord_dim
        mask = G.angle_mask()

        def residual(gg, hh, vv):
            out = self.apply(gg, vv)
            a = G.to_coords(out)
            b = G.to_coords(G.align(hh, out))
            r = np.empty(n, dtype=object)
            for k in range(n):
                d = a[k] - b[k]
                r[k] = dm.wrap_pm_pi(d) if mask[k] else d
            return r

        cg = np.asarray(G.to_coords(g), dtype=object)
        ch = np.asarray(G.to_coords(h), dtype=object)
        if any(dm._is_dual(c) for c in np.concatenate([cg, ch])):
            g0 = G.from_coords(np.array([primal(c) for c in cg], dtype=object),
                               like=g)
            h0 = G.from_coords(np.array([primal(c) for c in ch], dtype=object),
                               like=h)
            v0 = self.invert(g0, h0, tol=tol, max_iter=max_iter)
            # dF/dv at the primal solution (fresh dual layer per column)
            J = np.empty((n, n), dtype=object)
            for k in range(n):
                vd = np.array(list(v0), dtype=object)
                vd[k] = Dual(v0[k], 1.0)
                J[:, k] = [deriv(c) for c in residual(g0, h0, vd)]
            # dF/d(eps) through the dual parts of g and h
            r_eps = np.array([deriv(c) for c in residual(g, h, v0)],
                             dtype=object)
            delta = -(mat_inv(J) @ r_eps)
            return np.array([Dual(v0[k], delta[k]) for k in range(n)],
                            dtype=object)

        v = np.zeros(n)
        if self._guess is not None:
            try:
                v = np.array([value(c) for c in self._guess(g, h)],
                             dtype=float)
            except (OutOfChartError, np.linalg.LinAlgError):
                v = np.zeros(n)
        for _ in range(max_iter):
            r0 = np.array([value(c) for c in residual(g, h, v)], dtype=float)
            if np.max(np.abs(r0)) < tol:
                return v
            J = np.empty((n, n))
            for k in range(n):
                vd = np.array(list(v), dtype=object)
                vd[k] = Dual(v[k], 1.0)
                rk = residual(g, h, vd)
                J[:, k] = [deriv(c) for c in rk]
            try:
                step = np.linalg.solve(J, r0)
            except np.linalg.LinAlgError as exc:
                raise NewtonError(f"singular Jacobian in {self.name}.invert") from exc
            v = v - step
        raise NewtonError(f"{self.name}.invert did not converge")


# ---------------------------------------------------------------------------
# concrete additions


def flat_pair_addition(G: PairGroupoid, radius=math.pi / 2):
    """Componentwise angle addition on the pair groupoid of a torus."""

    def apply_fn(g, v):
        return np.asarray(g) + v

    def in_domain(g, v):
        return max(abs(value(c)) for c in v) < radius

    return LocalAddition(G, apply_fn, in_domain, adapted_to="source",
                         name="flat-pair")


def _log_radius(group):
    if group.name == "SO3":
        return math.pi - 1e-6
    return 1e6  # nilpotent / unconstrained


def _group_move(group, h, W):
    """h -> h · exp(h^{-1} W): move h along the ambient tangent W."""
    V = mat_inv(np.asarray(h)) @ np.asarray(W)
    return np.asarray(h) @ group.exp(V)


def group_addition(G: GroupOverPoint):
    """A_H(h.V) = h exp(V), in ambient-tangent coordinates."""
    group = G.group
    n = G.n
    rad = _log_radius(group)

    def apply_fn(g, v):
        return _group_move(group, g, v.reshape(n, n))

    def in_domain(g, v):
        V = mat_inv(np.asarray(g)) @ np.asarray(v, dtype=object).reshape(n, n)
        norm = math.sqrt(sum(value(c) ** 2 for c in V.ravel()))
        return norm < rad

    def guess_fn(g, h):
        # exact for groups with a closed-form log (dual-capable)
        g = np.asarray(g)
        return (g @ group.log(mat_inv(g) @ np.asarray(h))).ravel()

    return LocalAddition(G, apply_fn, in_domain, adapted_to="source",
                         name=f"group-exp[{group.name}]", guess_fn=guess_fn)


def bundle_addition(G: GroupBundle, radius=math.pi / 2):
    """Flat addition on the base times the group addition in the fiber."""
    group, d, n = G.group, G.d, G.n

    def apply_fn(g, v):
        x = np.atleast_1d(np.asarray(g.x, dtype=object)) + v[:d]
        h = _group_move(group, g.h, v[d:].reshape(n, n))
        from .groupoids import BundleArrow
        return BundleArrow(x, h)

    def in_domain(g, v):
        return max(abs(value(c)) for c in v[:d]) < radius if d else True

    return LocalAddition(G, apply_fn, in_domain, adapted_to="source",
                         name="bundle")


def opposite_addition(A: LocalAddition):
    """A^op = inv ∘ A ∘ T(inv): swaps source- for target-adaptedness."""
    if A.adapted_to != "source":
        raise ValueError("opposite_addition expects a source-adapted addition")
    G = A.G

    def apply_fn(g, v):
        c = G.to_coords(g)
        gd = G.from_coords(
            np.array([Dual(ci, vi) for ci, vi in zip(c, v)], dtype=object),
            like=g)
        gid = G.inv(gd)
        ci = G.to_coords(gid)
        g_inv = G.from_coords(np.array([primal(x) for x in ci], dtype=object),
                              like=gid)
        v_inv = np.array([deriv(x) for x in ci], dtype=object)
        return G.inv(A.apply(g_inv, v_inv))

    return LocalAddition(G, apply_fn, None, adapted_to="target",
                         name=f"opposite[{A.name}]")


def spray_extension(G: Groupoid, steps=32):
    """Local addition from the time-1 map of a right-invariant spray.

    Supported where the geodesic equation of the flat/bi-invariant base
    spray is integrable with fixed-step RK4: GroupOverPoint and the
    pair groupoid of a torus.  ``spray_exp`` exposes the time-t map for
    the homogeneity law.
    """
    if isinstance(G, GroupOverPoint):
        group, n = G.group, G.n

        def rhs(t, state):
            h = state[: n * n].reshape(n, n)
            w = state[n * n:].reshape(n, n)
            dw = w @ mat_inv(h) @ w
            return np.concatenate([w.ravel(), dw.ravel()])

        def spray_exp(g, v, time=1.0):
            state0 = np.concatenate(
                [np.asarray(g, dtype=object).ravel(),
                 np.asarray(v, dtype=object).ravel()])
            params = IntegrationParams(steps=steps, t0=0.0, t1=time)
            path = rk4_solve(rhs, state0, params)
            return path[-1][: n * n].reshape(n, n)

    elif isinstance(G, PairGroupoid):
        d = G.d

        def rhs(t, state):
            return np.concatenate([state[2 * d:], np.zeros(2 * d)])

        def spray_exp(g, v, time=1.0):
            state0 = np.concatenate([np.asarray(g, dtype=object),
                                     np.asarray(v, dtype=object)])
            params = IntegrationParams(steps=steps, t0=0.0, t1=time)
            path = rk4_solve(rhs, state0, params)
            return path[-1][: 2 * d]

    else:
        raise ValueError("spray_extension supports GroupOverPoint and PairGroupoid")

    def apply_fn(g, v):
        return spray_exp(g, v, 1.0)

    A = LocalAddition(G, apply_fn, None, adapted_to="source", name="spray")
    A.spray_exp = spray_exp
    return A


def gauge_addition(GG: GaugeGroupoid, radius=math.pi / 2):
    """Connection-based local addition on gauge-groupoid arrows.

    An arrow is an H-orbit of a pair of bundle points; a tangent vector
    is represented by a pair of bundle tangents, normalised so that the
    source leg is horizontal for the bundle's patched connection.  Each
    leg is then moved by "vertical exponential at the foot, then
    parallel transport along the base displacement".  Every ingredient
    is chart-independent, so the addition is globally well defined —
    the chart-overlap residual is round-off (exactly zero error when
    the connection values commute; integrator-limited otherwise).

    In the chart (i, j) this reads

        h ↦ T_i(y,vy) · h · exp(Ad(h^{-1})(A_i(y)vy) + h^{-1}W − A_j(x)vx) · T_j(x,vx)^{-1}

    with A_* the local connection forms and T_* the parallel
    transports.
    """
    from .manifolds import expm_series

    bundle = GG.bundle
    n = GG.n

    def apply_fn(g, v):
        vy, vx = v[0], v[1]
        W = np.asarray(v[2:], dtype=object).reshape(n, n)
        y2, x2 = g.y + vy, g.x + vx
        if not (bundle.chart_contains(g.i, y2) and bundle.chart_contains(g.j, x2)):
            raise OutOfChartError("gauge addition left the chart pair")
        h = np.asarray(g.h)
        hi = mat_inv(h)
        Ai = bundle.connection_form(g.i, g.y)
        Aj = bundle.connection_form(g.j, g.x)
        ver = hi @ (Ai * vy) @ h + hi @ W - Aj * vx
        hn = (bundle.parallel_transport(g.i, g.y, vy) @ h @ expm_series(ver)
              @ mat_inv(bundle.parallel_transport(g.j, g.x, vx)))
        return GaugeArrow(g.i, g.j, y2, x2, hn)

    def in_domain(g, v):
        return max(abs(value(v[0])), abs(value(v[1]))) < radius

    return LocalAddition(GG, apply_fn, in_domain, adapted_to="source",
                         name="gauge")


def flip_addition(A: LocalAddition):
    """The induced local addition on the tangent bundle, TA ∘ flip.

    Lives on the tangent prolongation of A's groupoid; a tangent vector
    at (g, u) is the concatenation (δg, δu), and

        A'((g,u), (δg,δu)) = (A(g, δg), d/dε A(g+εu, δg+εδu)).
    """
    G = A.G
    TG = TangentGroupoid(G)
    n = G.coord_dim

    def apply_fn(el: TangentArrow, w):
        c = G.to_coords(el.g)
        gd = G.from_coords(
            np.array([Dual(ci, ui) for ci, ui in zip(c, el.v)], dtype=object),
            like=el.g)
        vd = np.array([Dual(w[k], w[n + k]) for k in range(n)], dtype=object)
        out = A.apply(gd, vd)
        co = G.to_coords(out)
        g2 = G.from_coords(np.array([primal(x) for x in co], dtype=object),
                           like=out)
        u2 = np.array([deriv(x) for x in co], dtype=object)
        return TangentArrow(g2, u2)

    def in_domain(el, w):
        return A.in_domain(el.g, w[:n])

    guess_fn = None
    if A._guess is not None:
        def guess_fn(el: TangentArrow, hl: TangentArrow):
            # differentiate the underlying guess through a dual push
            def pack(q):
                c = G.to_coords(q.g)
                return G.from_coords(
                    np.array([Dual(ci, ui) for ci, ui in zip(c, q.v)],
                             dtype=object), like=q.g)

            w = np.asarray(A._guess(pack(el), pack(hl)), dtype=object)
            return np.concatenate([[primal(c) for c in w],
                                   [deriv(c) for c in w]])

    return LocalAddition(TG, apply_fn, in_domain, adapted_to=A.adapted_to,
                         name=f"flip[{A.name}]", guess_fn=guess_fn)


# ---------------------------------------------------------------------------
# adaptedness and round-trip diagnostics


def _fiber_indices(G: Groupoid, which):
    """Coordinate indices carrying the source (or target) of an arrow."""
    if isinstance(G, PairGroupoid):
        return list(range(G.d, 2 * G.d)) if which == "source" else list(range(G.d))
    if isinstance(G, GroupOverPoint):
        return []
    if isinstance(G, GroupBundle):
        return list(range(G.d))
    if isinstance(G, GaugeGroupoid):
        return [1] if which == "source" else [0]
    if isinstance(G, TangentGroupoid):
        inner = _fiber_indices(G.G, which)
        n = G.G.coord_dim
        return inner + [n + k for k in inner]
    raise ValueError(f"no fiber-coordinate table for {type(G).__name__}")


def random_vertical(G: Groupoid, rng, g, which="source", scale=0.1):
    """A random tangent vector at g annihilated by T(source) (or
    T(target))."""
    v = rng.normal(0.0, scale, G.coord_dim)
    for k in _fiber_indices(G, which):
        v[k] = 0.0
    return v


def check_adapted(A: LocalAddition, rng=None, n=100, tol=1e-10, scale=0.1):
    """Max drift of the source (resp. target) point under A along
    vertical vectors; raises NotAdaptedError beyond tol."""
    if A.adapted_to not in ("source", "target"):
        raise ValueError("addition not declared adapted")
    if rng is None:
        rng = np.random.default_rng(0)
    G = A.G
    proj = G.source if A.adapted_to == "source" else G.target
    worst = 0.0
    witness = None
    for _ in range(n):
        g = G.random_element(rng)
        v = random_vertical(G, rng, g, which=A.adapted_to, scale=scale)
        try:
            h = A.apply(g, v)
        except OutOfChartError:
            continue
        d = G.base.dist(_vals(proj(g)), _vals(proj(h)))
        if d > worst:
            worst, witness = d, (g, v)
    if worst > tol:
        raise NotAdaptedError(
            f"{A.name} drifts the {A.adapted_to} by {worst:.3g} at {witness}")
    return worst


def roundtrip_residual(A: LocalAddition, rng=None, n=100, scale=0.1):
    """Newton round trip: h = A(g, v), v* = invert(g, h), compare
    A(g, v*) with h."""
    if rng is None:
        rng = np.random.default_rng(0)
    G = A.G
    worst = 0.0
    for _ in range(n):
        g = G.random_element(rng)
        v = rng.normal(0.0, scale, G.coord_dim)
        try:
            h = A.apply(g, v)
            v2 = A.invert(g, h)
        except OutOfChartError:
            continue
        worst = max(worst, G.element_dist(A.apply(g, v2), h))
    return worst


def gauge_overlap_residual(A: LocalAddition, rng=None, n=50, scale=0.1):
    """Evaluate the gauge addition on the same geometric tangent vector
    in two chart presentations and compare the resulting arrows."""
    if rng is None:
        rng = np.random.default_rng(0)
    GG = A.G
    bundle = GG.bundle
    worst = 0.0
    tried = 0
    while tried < n:
        g = GG.random_element(rng)
        ys = bundle.charts_at(g.y)
        xs = bundle.charts_at(g.x)
        alts = [(m, nn) for m in ys for nn in xs if (m, nn) != (g.i, g.j)]
        if not alts:
            continue
        m, nn = alts[rng.integers(len(alts))]
        v = rng.normal(0.0, scale, GG.coord_dim)
        # transport the tangent vector to the other chart by a dual push
        c = GG.to_coords(g)
        gd = GG.from_coords(
            np.array([Dual(ci, vi) for ci, vi in zip(c, v)], dtype=object),
            like=g)
        g2d = GG.chart_change(gd, m, nn)
        c2 = GG.to_coords(g2d)
        g2 = GG.from_coords(np.array([primal(x) for x in c2], dtype=object),
                            like=g2d)
        v2 = np.array([deriv(x) for x in c2], dtype=object)
        try:
            out1 = A.apply(g, v)
            out2 = A.apply(g2, v2)
        except OutOfChartError:
            continue
        worst = max(worst, GG.element_dist(out1, out2))
        tried += 1
    return worst


def _vals(arr):
    return np.array([value(c) for c in np.atleast_1d(np.asarray(arr, dtype=object))],
                    dtype=float)
