"""The Lie algebroid of a Lie groupoid.

Sections are source-vertical tangent vectors along the units.  The
anchor pushes them to the base through the target map; the right
invariant extension spreads them over all arrows through composition;
the bracket of two sections is the commutator of their extensions read
back at the units.  The group-side bracket differentiates commutators
of bisections through the canonical chart and is the anti-isomorphic
partner of the algebroid bracket — the sign discrepancy is the point,
and it is what the checks in this module measure.

All derivatives are dual-number pushes except the group-side bracket,
which is a mixed second central difference: differentiating the Newton
inversion inside the chart with nested duals is fragile, while the
finite difference is certified by halving the step.
"""

from __future__ import annotations

import math

import numpy as np

from . import dual as dm
from .dual import Dual, value
from .additions import LocalAddition, _fiber_indices
from .bisections import (Bisection, VerticalSection, act, apply_chart,
                         chart_phi, inverse, star, unit_bisection)
from .groupoids import Groupoid, _values
from .manifolds import mat_inv

TWO_PI = 2.0 * math.pi


class NotASectionError(ValueError):
    pass


class AlgebroidSection:
    """A section of the algebroid: x -> tangent coordinates at the unit
    arrow over x, annihilated by T(source).

    ``field`` must be dual-evaluable in x (x is a plain scalar for the
    circle base, ignored for a point base).
    """

    def __init__(self, G: Groupoid, field, grid_n=32, check=True,
                 name="section"):
        self.G = G
        self.field = field
        self.grid_n = grid_n
        self.base_dim = G.base.dim
        self.name = name
        if check:
            r = self.verticality_residual()
            if r > 1e-10:
                raise NotASectionError(
                    f"field is not source-vertical (residual {r:.3g})")

    def __call__(self, x):
        return np.asarray(self.field(x), dtype=object)

    def grid_points(self):
        if self.base_dim == 0:
            return [0.0]
        return np.linspace(0.0, TWO_PI, self.grid_n, endpoint=False)

    def unit_arrow(self, x):
        if self.base_dim == 0:
            return self.G.unit(np.zeros(0))
        return self.G.unit(np.atleast_1d(x))

    def verticality_residual(self, n=None):
        G = self.G
        worst = 0.0
        pts = self.grid_points() if n is None else np.linspace(
            0.0, TWO_PI, n, endpoint=False)
        for x in np.atleast_1d(pts):
            u = self.unit_arrow(float(x))
            c = G.to_coords(u)
            v = self(float(x))
            gd = G.from_coords(
                np.array([Dual(ci, vi) for ci, vi in zip(c, v)], dtype=object),
                like=u)
            for comp in np.atleast_1d(G.source(gd)):
                worst = max(worst, abs(dm.deriv(comp)))
        return worst

    # -- linear structure --------------------------------------------------
    def scale(self, a):
        return AlgebroidSection(self.G, lambda x: a * self(x),
                                grid_n=self.grid_n, check=False,
                                name=f"{a}*{self.name}")

    def add(self, other):
        return AlgebroidSection(self.G, lambda x: self(x) + other(x),
                                grid_n=self.grid_n, check=False,
                                name=f"{self.name}+{other.name}")

    def sub(self, other):
        return self.add(other.scale(-1.0))

    def sup_dist(self, other, n=None):
        pts = self.grid_points() if n is None else np.linspace(
            0.0, TWO_PI, n, endpoint=False)
        worst = 0.0
        for x in np.atleast_1d(pts):
            d = _values(self(float(x))) - _values(other(float(x)))
            worst = max(worst, float(np.max(np.abs(d))))
        return worst

    def sup_norm(self, n=None):
        return self.sup_dist(zero_section(self.G, grid_n=self.grid_n), n=n)

    def export_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + [f"v{k}" for k in range(self.G.coord_dim)])
            for x in np.atleast_1d(self.grid_points()):
                w.writerow([float(x)] + list(_values(self(float(x)))))


def zero_section(G, grid_n=32):
    return AlgebroidSection(
        G, lambda x: np.zeros(G.coord_dim, dtype=object), grid_n=grid_n,
        check=False, name="0")


def pair_section(P, coeff, grid_n=32, name="v*d"):
    """On the pair groupoid of the circle the algebroid is TM: the
    section with target-slot coefficient ``coeff(x)``."""

    def field(x):
        return np.array([coeff(x), 0.0 * x], dtype=object)

    return AlgebroidSection(P, field, grid_n=grid_n, name=name)


def constant_group_section(GP, W, grid_n=1, name="W"):
    """On a group over a point the algebroid is the Lie algebra: the
    constant section at W."""
    W = np.asarray(W, dtype=object)

    def field(x):
        return W.ravel().copy()

    return AlgebroidSection(GP, field, grid_n=grid_n, check=False, name=name)


def gauge_section(GG, anchor_coeff, vertical_part, grid_n=32, name="(a,W)"):
    """Smooth section of the gauge algebroid from global data: a base
    coefficient ``anchor_coeff(x)`` and a Lie-algebra-valued
    ``vertical_part(x)`` (both dual-evaluable).

    The raw chart fiber component is not chart-independent, so writing
    the same numeric matrix in whichever chart is preferred would give
    a section that jumps at the chart-switch points.  Instead the fiber
    part in chart i is assembled covariantly: the horizontal component
    -A_i(x)·a for the base motion, plus the partition-of-unity average
    of the vertical data conjugated into chart i.  Both pieces obey the
    chart-change law of tangent vectors, so the underlying geometric
    section is smooth."""
    bundle = GG.bundle

    def field(x):
        a = anchor_coeff(x)
        V = np.asarray(vertical_part(x), dtype=object)
        i = bundle.preferred_chart(value(x))
        W = -(np.asarray(bundle.connection_form(i, x), dtype=object) * a)
        for l in range(bundle.n_charts):
            if not bundle.chart_contains(l, value(x)):
                continue
            lam = bundle.pou.weight(l, x)
            if abs(value(lam)) < 1e-15:
                continue
            if l == i:
                W = W + lam * V
            else:
                k = np.asarray(bundle.transition(i, l, x))
                W = W + lam * (k @ V @ mat_inv(k))
        return np.concatenate([[a, 0.0 * x], W.ravel()])

    return AlgebroidSection(GG, field, grid_n=grid_n, name=name)


# ---------------------------------------------------------------------------
# anchor and right-invariant extension


def anchor(X: AlgebroidSection):
    """The vector field on the base: x -> T(target)(X(x)), by a dual
    push through the target map."""
    G = X.G

    def vf(x):
        u = X.unit_arrow(x)
        c = G.to_coords(u)
        v = X(x)
        gd = G.from_coords(
            np.array([Dual(ci, vi) for ci, vi in zip(c, v)], dtype=object),
            like=u)
        return np.array([dm.deriv(t) for t in np.atleast_1d(G.target(gd))],
                        dtype=object)

    return vf


def right_invariant_extension(X: AlgebroidSection, g, like=None):
    """Tangent coordinates of ->X at the arrow g: T(R_g)(X(beta(g))),
    by a dual push through composition.  The arrow may itself carry
    dual coordinates (that is how the bracket is computed).  The
    result is expressed in the chart of ``like`` (default: g)."""
    G = X.G
    # The arrow may already carry a dual direction; that layer has to
    # stay strictly inside the fresh layer introduced here, so every
    # coordinate of g is promoted to a constant of the new (outer)
    # layer before any arithmetic mixes them.
    cg = np.asarray(G.to_coords(g), dtype=object)
    if any(dm._is_dual(q) for q in cg):
        g = G.from_coords(
            np.array([Dual(q, 0.0) for q in cg], dtype=object), like=g)
    b = np.atleast_1d(G.target(g))
    x = b[0] if X.base_dim else None
    u = G.unit(b)
    c = np.asarray(G.to_coords(u), dtype=object)
    v = X(x) if X.base_dim else X(None)
    # ci + (0 + 1·d)·vi rather than Dual(ci, vi): the components may
    # already live in the promoted layer, and this form respects that.
    eps = Dual(0.0, 1.0)
    hd = G.from_coords(
        np.array([ci + eps * vi for ci, vi in zip(c, v)], dtype=object),
        like=u)
    comp = G.align(G.compose(hd, g), like if like is not None else g)
    return np.array([dm.deriv(t) for t in G.to_coords(comp)], dtype=object)


def algebroid_bracket(X: AlgebroidSection, Y: AlgebroidSection, grid_n=None):
    """[X, Y] = [->X, ->Y] restricted to units, via directional dual
    pushes of the extensions: D(->Y)[->X] - D(->X)[->Y] at 1_x."""
    G = X.G

    def field(x):
        u = X.unit_arrow(x)
        c = np.asarray(G.to_coords(u), dtype=object)

        def push(Z, w):
            gd = G.from_coords(
                np.array([Dual(ci, wi) for ci, wi in zip(c, w)],
                         dtype=object), like=u)
            ext = right_invariant_extension(Z, gd, like=u)
            return np.array([dm.deriv(e) for e in ext], dtype=object)

        vX, vY = X(x), Y(x)
        return push(Y, vX) - push(X, vY)

    return AlgebroidSection(G, field, grid_n=grid_n or X.grid_n, check=False,
                            name=f"[{X.name},{Y.name}]")


# ---------------------------------------------------------------------------
# the group-side bracket on the bisection group


class StepSizeError(RuntimeError):
    pass


def _exp_bisection(X: AlgebroidSection, s, A: LocalAddition, grid_n,
                   check=False):
    """sigma_s(x) = A(1_x, s*X(x)): the chart line through the unit in
    direction X, a bisection for small s."""
    G = X.G
    u = unit_bisection(G, grid_n=grid_n)
    vs = VerticalSection(u, lambda x: s * X(x))
    return apply_chart(u, vs, A, check=check)


def group_bracket(X: AlgebroidSection, Y: AlgebroidSection,
                  A: LocalAddition, h=1e-3, grid_n=None):
    """The Lie bracket on the tangent space at the identity of the
    bisection group: mixed second central difference d^2/ds dt at 0 of
    the commutator sigma_s * tau_t * sigma_s^-1 * tau_t^-1, read back
    through the canonical chart at the unit."""
    G = X.G
    grid_n = grid_n or X.grid_n
    u = unit_bisection(G, grid_n=grid_n)

    try:
        sig = {s: _exp_bisection(X, s, A, grid_n, check=(s == h))
               for s in (h, -h)}
        tau = {t: _exp_bisection(Y, t, A, grid_n, check=(t == h))
               for t in (h, -h)}
    except Exception as exc:
        raise StepSizeError(
            f"chart line is not a bisection at step {h:g}; "
            f"reduce h ({exc})") from exc

    comm = {}
    for s in (h, -h):
        si = inverse(sig[s])
        for t in (h, -h):
            comm[s, t] = star(star(star(sig[s], tau[t]), si),
                              inverse(tau[t]))

    def field(x):
        def read(s, t):
            g = comm[s, t].section(x) if X.base_dim else comm[s, t](None)
            anchor_arrow = u(x) if X.base_dim else u(None)
            return np.asarray(A.invert(anchor_arrow, g), dtype=object)

        return (read(h, h) - read(h, -h) - read(-h, h) + read(-h, -h)) \
            / (4.0 * h * h)

    return AlgebroidSection(G, field, grid_n=grid_n, check=False,
                            name=f"{{{X.name},{Y.name}}}")


# ---------------------------------------------------------------------------
# naturality and cross-checks


def pushforward_section(f, X: AlgebroidSection, grid_n=None):
    """T(f) applied pointwise to a section: the algebroid leg of the
    morphism f (which covers the identity on the base)."""
    G, H = f.src, f.dst

    def field(x):
        u = X.unit_arrow(x)
        c = G.to_coords(u)
        v = X(x)
        gd = G.from_coords(
            np.array([Dual(ci, vi) for ci, vi in zip(c, v)], dtype=object),
            like=u)
        img = f(gd)
        uh = H.unit(np.atleast_1d(x) if X.base_dim else np.zeros(0))
        img = H.align(img, uh)
        return np.array([dm.deriv(t) for t in H.to_coords(img)], dtype=object)

    return AlgebroidSection(H, field, grid_n=grid_n or X.grid_n, check=False,
                            name=f"Tf.{X.name}")


def phi_and_naturality_check(f, X: AlgebroidSection, Y: AlgebroidSection,
                             A_src: LocalAddition = None,
                             A_dst: LocalAddition = None, h=1e-3, n=16):
    """Residual report for the naturality square of the identification
    between the algebroid and the tangent space of the bisection group.

    Always reports the algebroid-side residual
    ``|Tf [X,Y] - [Tf X, Tf Y]|``; when local additions for source and
    target are supplied, also the group-side residual
    ``|Tf {X,Y} - {Tf X, Tf Y}|`` at step h.
    """
    br = algebroid_bracket(X, Y)
    Xf, Yf = pushforward_section(f, X), pushforward_section(f, Y)
    report = {
        "algebroid_naturality":
            pushforward_section(f, br).sup_dist(
                algebroid_bracket(Xf, Yf), n=n),
    }
    if A_src is not None and A_dst is not None:
        gb = group_bracket(X, Y, A_src, h=h)
        gbf = group_bracket(Xf, Yf, A_dst, h=h)
        report["group_naturality"] = pushforward_section(f, gb).sup_dist(
            gbf, n=n)
    report["max"] = max(report.values())
    return report


def atiyah_bracket(GG, X: AlgebroidSection, Y: AlgebroidSection, grid_n=32):
    """The bracket computed on total-space representatives.

    A section with chart data (a(x), W(x)) corresponds to the invariant
    vector field V(x, p) = (a(x), W(x)·p) on the chart-i slice of the
    principal bundle; the ordinary vector-field bracket of two such
    fields is again of this form, and the claim under test is that it
    reproduces the algebroid bracket.  Computed with dual pushes in the
    chart coordinates (x, p)."""
    G = GG

    def rep(Z, x):
        """(a, W) of a section at x in the chart of the unit arrow."""
        v = Z(x)
        n = GG.bundle.group.n
        return v[0], np.asarray(v[2:]).reshape(n, n)

    def field(x):
        n = GG.bundle.group.n
        eye = np.eye(n)

        def flow(Z, xq, p):
            a, W = rep(Z, xq)
            return a, W @ p

        # [V1, V2] = DV2·V1 − DV1·V2 in (x, p) coordinates at p = id
        def directional(Zout, Zin):
            a_in, W_in = rep(Zin, x)
            xd = Dual(x, a_in)
            pd = np.array([[Dual(eye[r, c], W_in[r, c]) for c in range(n)]
                           for r in range(n)], dtype=object)
            a_out, dW = flow(Zout, xd, pd)
            return (dm.deriv(a_out),
                    np.array([[dm.deriv(dW[r, c]) for c in range(n)]
                              for r in range(n)], dtype=object))

        a12, W12 = directional(Y, X)
        a21, W21 = directional(X, Y)
        a, W = a12 - a21, W12 - W21
        return np.concatenate([[a, 0.0 * x], W.ravel()])

    return AlgebroidSection(GG, field, grid_n=grid_n, check=False,
                            name=f"atiyah[{X.name},{Y.name}]")


def action_derivative_check(X: AlgebroidSection, A: LocalAddition, rng=None,
                            n=20):
    """The curve of bisections eta(t) = chart line through the unit in
    direction X acts on an arrow g; its t-derivative at 0 must be the
    right-invariant extension ->X(g).  Returns the max residual."""
    G = X.G
    if rng is None:
        rng = np.random.default_rng(0)
    u = unit_bisection(G)
    worst = 0.0
    for _ in range(n):
        g = G.random_element(rng)
        b = np.atleast_1d(G.target(g))
        x = b[0] if X.base_dim else None
        td = Dual(0.0, 1.0)
        moved = A.apply(u(x) if X.base_dim else u(None),
                        np.array([td * vi for vi in X(x)], dtype=object))
        acted = G.align(G.compose(moved, g), g)
        got = np.array([dm.deriv(c) for c in G.to_coords(acted)])
        want = _values(right_invariant_extension(X, g))
        worst = max(worst, float(np.max(np.abs(got - want))))
    return worst
