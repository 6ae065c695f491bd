"""Shared numeric substrate.

Forward-mode derivatives, finite-difference oracles, fixed-step RK4,
Newton inversion of monotone circle maps, trigonometric interpolation on
uniform grids, and smooth bump functions / partitions of unity on the
circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dual as dm
from .dual import Dual, value

TWO_PI = 2.0 * math.pi


class IntegrationDivergedError(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"non-finite state at integration step {step}")
        self.step = step


class NotADiffeomorphismError(ValueError):
    pass


class NewtonError(RuntimeError):
    pass


def derivative(f, x):
    """Derivative of a scalar function at ``x`` via a dual-number push."""
    return dm.deriv(f(Dual(x, 1.0)))


def second_derivative(f, x):
    """Exact second derivative via two nested dual layers."""
    inner = f(Dual(Dual(x, 1.0), Dual(1.0, 0.0)))
    return dm.deriv(dm.deriv(inner))


def fd_derivative(f, x, h=1e-6):
    """Central difference (f(x+h) - f(x-h)) / 2h; the FD oracle kept
    independent of the dual-number path."""
    if h <= 0:
        raise ValueError("step h must be positive")
    return (f(x + h) - f(x - h)) / (2.0 * h)


@dataclass(frozen=True)
class IntegrationParams:
    steps: int = 200
    t0: float = 0.0
    t1: float = 1.0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    def times(self):
        return np.linspace(self.t0, self.t1, self.steps + 1)


def rk4_solve(rhs, x0, params: IntegrationParams, post_step=None):
    """Classical fixed-step RK4.

    ``rhs(t, x)`` and the state may hold dual scalars (object arrays);
    plain float states use vectorised numpy arithmetic.  ``post_step``,
    if given, may renormalise the state after each step (used for chart
    switching).  Returns the full path, shape (steps+1, dim).
    """
    x = np.asarray(x0)
    dt = (params.t1 - params.t0) / params.steps
    path = [x]
    t = params.t0
    for n in range(params.steps):
        k1 = np.asarray(rhs(t, x))
        k2 = np.asarray(rhs(t + dt / 2.0, x + (dt / 2.0) * k1))
        k3 = np.asarray(rhs(t + dt / 2.0, x + (dt / 2.0) * k2))
        k4 = np.asarray(rhs(t + dt, x + dt * k3))
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if x.dtype != object and not np.all(np.isfinite(x)):
            raise IntegrationDivergedError(n)
        if post_step is not None:
            x = post_step(x)
        t = params.t0 + (n + 1) * dt
        path.append(x)
    return np.array(path)


def invert_circle_diffeo(lift, y, tol=1e-12, max_iter=50, check_grid=64):
    """Solve lift(x) = y for a degree-1 strictly increasing lift of a
    circle diffeomorphism.

    Falls back to bisection when Newton stalls.  A dual-valued ``y`` is
    handled by the implicit function theorem.  Set ``check_grid=0`` to
    skip the monotonicity pre-check (cheaper when the caller already
    certified the lift).
    """
    if isinstance(y, Dual):
        x0 = invert_circle_diffeo(lift, value(y), tol, max_iter, check_grid)
        slope = derivative(lift, x0)
        return Dual(x0, y.eps / slope)

    if check_grid:
        xs = np.linspace(0.0, TWO_PI, check_grid, endpoint=False)
        dmin = min(derivative(lift, float(x)) for x in xs)
        if dmin <= 1e-8:
            raise NotADiffeomorphismError(
                f"lift not strictly increasing (min sampled derivative {dmin:.3g})"
            )

    # initial guess: undo the mean displacement
    x = y - (lift(y) - y)
    for _ in range(max_iter):
        r = lift(x) - y
        if abs(r) < tol:
            return x
        slope = derivative(lift, x)
        if slope <= 1e-12:
            break
        x = x - r / slope

    # bisection fallback on the lift (monotone, so a bracket exists)
    lo, hi = y - TWO_PI, y + TWO_PI
    while lift(lo) > y:
        lo -= TWO_PI
    while lift(hi) < y:
        hi += TWO_PI
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if lift(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            return 0.5 * (lo + hi)
    raise NewtonError(f"circle inversion did not converge for y={y}")


class PeriodicGridFunction:
    """Function on [0, 2pi)^d stored by samples on a uniform grid and
    evaluated by trigonometric interpolation (exact below Nyquist)."""

    def __init__(self, samples):
        samples = np.asarray(samples, dtype=float)
        self.samples = samples
        self.dim = samples.ndim
        self.shape = samples.shape
        self._coef = np.fft.fftn(samples) / samples.size
        self._freqs = [np.fft.fftfreq(n, d=1.0 / n) for n in samples.shape]

    @classmethod
    def sample(cls, f, n=256, dim=1):
        xs = np.linspace(0.0, TWO_PI, n, endpoint=False)
        if dim == 1:
            return cls(np.array([f(x) for x in xs]))
        grids = np.meshgrid(*([xs] * dim), indexing="ij")
        vals = np.vectorize(f)(*grids)
        return cls(vals)

    def __call__(self, *x):
        if len(x) == 1 and self.dim == 1:
            phase = np.exp(1j * self._freqs[0] * x[0])
            return float(np.real(np.sum(self._coef * phase)))
        acc = self._coef
        for axis, xi in enumerate(x):
            phase = np.exp(1j * self._freqs[axis] * xi)
            acc = np.tensordot(acc, phase, axes=([0], [0]))
        return float(np.real(acc))

    def grid_points(self):
        n = self.shape[0]
        return np.linspace(0.0, TWO_PI, n, endpoint=False)


class ChebyshevMatrixField:
    """A matrix-valued smooth function on an interval, stored as one
    Chebyshev coefficient block evaluated for all entries at once;
    supports (nested) dual evaluation and exact antiderivatives."""

    def __init__(self, coefs, shape, lo, hi):
        self.coefs = coefs  # (deg+1, n*m) on the standard interval
        self.shape = shape
        self.lo = float(lo)
        self.hi = float(hi)
        self._deriv = None

    @classmethod
    def fit(cls, func, lo, hi, deg=160):
        from numpy.polynomial.chebyshev import chebfit

        # Chebyshev points of the first kind on [-1, 1], mapped to the
        # interval; one function call per node shared by all entries.
        k = np.arange(deg + 1)
        u = np.cos(np.pi * (2 * k + 1) / (2 * (deg + 1)))
        xs = 0.5 * (hi - lo) * u + 0.5 * (hi + lo)
        vals = np.array([np.asarray(func(float(x)), dtype=float) for x in xs])
        n, m = vals.shape[1:]
        return cls(chebfit(u, vals.reshape(deg + 1, n * m), deg), (n, m),
                   lo, hi)

    def antiderivative(self):
        from numpy.polynomial.chebyshev import chebint

        # integrate on the standard interval; rescale by dx/du
        scl = 0.5 * (self.hi - self.lo)
        return ChebyshevMatrixField(chebint(self.coefs, axis=0, scl=scl),
                                    self.shape, self.lo, self.hi)

    def deriv(self):
        if self._deriv is None:
            from numpy.polynomial.chebyshev import chebder

            scl = 2.0 / (self.hi - self.lo)
            self._deriv = ChebyshevMatrixField(
                chebder(self.coefs, axis=0, scl=scl), self.shape,
                self.lo, self.hi)
        return self._deriv

    def __call__(self, x):
        from numpy.polynomial.chebyshev import chebval

        n, m = self.shape
        if isinstance(x, Dual):
            val = self(x.re)
            der = self.deriv()(x.re)
            out = np.empty((n, m), dtype=object)
            for a in range(n):
                for b in range(m):
                    out[a, b] = Dual(val[a, b], der[a, b] * x.eps)
            return out
        u = (2.0 * x - (self.lo + self.hi)) / (self.hi - self.lo)
        return chebval(u, self.coefs, tensor=False).reshape(n, m)

    def max_error(self, func, n=200, margin=1e-6):
        worst = 0.0
        for x in np.linspace(self.lo + margin, self.hi - margin, n):
            worst = max(worst, float(np.max(np.abs(
                np.asarray(func(x), dtype=float) - self(x)))))
        return worst

    def shift(self, offset):
        """Add a constant matrix (adjusts the T_0 coefficient)."""
        coefs = self.coefs.copy()
        coefs[0] += np.asarray(offset, dtype=float).ravel()
        return ChebyshevMatrixField(coefs, self.shape, self.lo, self.hi)


class PiecewiseChebyshevMatrixField:
    """A matrix-valued function on an interval stored as low-degree
    Chebyshev interpolants on equal panels: same interface as
    :class:`ChebyshevMatrixField` but much cheaper to evaluate and
    accurate for functions that are only piecewise-analytic."""

    def __init__(self, pieces):
        self.pieces = pieces
        self.lo = pieces[0].lo
        self.hi = pieces[-1].hi
        self.shape = pieces[0].shape

    @classmethod
    def fit(cls, func, lo, hi, deg=48, panels=16):
        edges = np.linspace(lo, hi, panels + 1)
        return cls([ChebyshevMatrixField.fit(func, a, b, deg=deg)
                    for a, b in zip(edges[:-1], edges[1:])])

    def _piece(self, x):
        xv = value(x)
        width = (self.hi - self.lo) / len(self.pieces)
        k = int((xv - self.lo) / width)
        return self.pieces[min(max(k, 0), len(self.pieces) - 1)]

    def __call__(self, x):
        return self._piece(x)(x)

    def antiderivative(self):
        out = []
        offset = np.zeros(self.shape)
        for p in self.pieces:
            F = p.antiderivative()
            out.append(F.shift(offset - F(p.lo)))
            offset = out[-1](p.hi)
        return PiecewiseChebyshevMatrixField(out)

    def max_error(self, func, n=200, margin=1e-6):
        worst = 0.0
        for x in np.linspace(self.lo + margin, self.hi - margin, n):
            worst = max(worst, float(np.max(np.abs(
                np.asarray(func(x), dtype=float) - self(x)))))
        return worst


def smooth_bump(u):
    """exp(-1/(1-u^2)) on (-1, 1), zero outside; smooth on the line.
    Accepts dual scalars."""
    if abs(value(u)) >= 1.0:
        return 0.0
    return dm.exp(-1.0 / (1.0 - u * u))


def _arc_bump(lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)

    def bump(x):
        # position relative to the arc, measured on the circle
        d = dm.wrap_pm_pi(x - mid)
        return smooth_bump(d / half)

    return bump


class PartitionOfUnity:
    """Smooth bumps subordinate to arcs of the circle, normalised to sum
    to one.  Arcs are (lo, hi) on the lift; together they must cover."""

    def __init__(self, arcs):
        self.arcs = list(arcs)
        self._bumps = [_arc_bump(lo, hi) for lo, hi in self.arcs]
        # sanity: positive total on a fine grid
        xs = np.linspace(0.0, TWO_PI, 512, endpoint=False)
        tot = np.array([sum(b(x) for b in self._bumps) for x in xs])
        if tot.min() <= 0.0:
            raise ValueError("arcs do not cover the circle")

    def __len__(self):
        return len(self.arcs)

    def weight(self, i, x):
        tot = sum(b(x) for b in self._bumps)
        return self._bumps[i](x) / tot

    def weights(self, x):
        raw = [b(x) for b in self._bumps]
        tot = sum(raw)
        return [r / tot for r in raw]

    def partial_sum(self, i, x):
        """lambda_1 + ... + lambda_i (i terms)."""
        return sum(self.weight(j, x) for j in range(i))
