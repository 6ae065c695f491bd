"""Compact base manifolds (point, flat torus) and matrix vertex groups.

Matrix elements are numpy arrays; when dual scalars appear the arrays
switch to object dtype and all helpers keep working (matmul on object
arrays dispatches to the scalar operators).
"""

from __future__ import annotations

import math

import numpy as np

from . import dual as dm
from .dual import Dual, value

TWO_PI = 2.0 * math.pi


class OutOfChartError(ValueError):
    pass


class InvalidTangentError(ValueError):
    pass


# ---------------------------------------------------------------------------
# base manifolds


def wrap_point(x):
    """Componentwise reduction mod 2pi (derivative-transparent)."""
    return np.array([dm.wrap_2pi(c) for c in np.atleast_1d(x)], dtype=_dtype_of(x))


def circle_dist(a, b):
    """Distance on the circle between angles a, b."""
    d = abs(dm.wrap_pm_pi(a - b))
    return value(d)


def torus_dist(x, y):
    return max(circle_dist(a, b) for a, b in zip(np.atleast_1d(x), np.atleast_1d(y)))


def _dtype_of(x):
    arr = np.atleast_1d(np.asarray(x, dtype=object))
    if any(isinstance(c, Dual) for c in arr.ravel()):
        return object
    return float


class Point:
    """The one-point manifold."""

    dim = 0

    def wrap(self, x):
        return np.zeros(0)

    def add(self, x, v):
        return np.zeros(0)

    def dist(self, x, y):
        return 0.0

    def random_point(self, rng):
        return np.zeros(0)

    def __repr__(self):
        return "Point()"


class Torus:
    """Flat d-torus with coordinates mod 2pi and the global flat local
    addition (x, v) -> x + v."""

    def __init__(self, dim=1):
        self.dim = dim

    def wrap(self, x):
        return wrap_point(x)

    def add(self, x, v):
        return wrap_point(np.atleast_1d(x) + np.atleast_1d(v))

    def dist(self, x, y):
        return torus_dist(x, y)

    def random_point(self, rng):
        return rng.uniform(0.0, TWO_PI, self.dim)

    def __repr__(self):
        return f"Torus({self.dim})"


Circle = Torus  # Torus(1)


# ---------------------------------------------------------------------------
# generic small-matrix helpers (dual-safe)


def mat(a):
    return np.asarray(a)


def mat_inv(a):
    """Inverse of a small matrix by Gaussian elimination with partial
    pivoting on the value part; works on object (dual) arrays."""
    a = np.asarray(a)
    if a.dtype != object:
        return np.linalg.inv(a)
    n = a.shape[0]
    aug = np.empty((n, 2 * n), dtype=object)
    aug[:, :n] = a
    aug[:, n:] = np.array([[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)], dtype=object)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(value(aug[r, col])))
        if abs(value(aug[piv, col])) < 1e-14:
            raise np.linalg.LinAlgError("singular matrix")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        inv = 1.0 / aug[col, col]
        aug[col] = aug[col] * inv
        for r in range(n):
            if r != col:
                factor = aug[r, col]
                aug[r] = aug[r] - factor * aug[col]
    return aug[:, n:]


def expm_series(V, scaling=True):
    """Matrix exponential by Taylor series (with scaling and squaring).

    Independent of the closed-form group exponentials; dual-safe, hence
    also usable inside tangent pushes.
    """
    V = np.asarray(V)
    n = V.shape[0]
    norm = max(abs(value(c)) for c in V.ravel()) if V.size else 0.0
    s = 0
    if scaling and norm > 0.5:
        s = max(0, int(math.ceil(math.log2(norm / 0.5))))
        V = V / float(2 ** s)
    eye = np.eye(n) if V.dtype != object else np.array(
        [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)], dtype=object)
    out = eye.copy()
    term = eye.copy()
    for k in range(1, 30):
        term = term @ V / float(k)
        out = out + term
        if max(abs(value(c)) for c in term.ravel()) < 1e-18:
            break
    for _ in range(s):
        out = out @ out
    return out


def _sinc_pair(theta2):
    """(sin t / t, (1 - cos t) / t^2) as functions of t^2, stable and
    dual-evaluable near zero."""
    if value(theta2) < 1e-8:
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
        return a, b
    t = dm.sqrt(theta2)
    return dm.sin(t) / t, (1.0 - dm.cos(t)) / theta2


def so3_hat(v):
    z = 0.0 * v[0]
    return np.array([[z, -v[2], v[1]],
                     [v[2], z, -v[0]],
                     [-v[1], v[0], z]], dtype=_dtype_of(v))


def so3_vee(V):
    return np.array([V[2, 1], V[0, 2], V[1, 0]], dtype=_dtype_of(V.ravel()))


# ---------------------------------------------------------------------------
# matrix groups


class MatrixGroup:
    """Base class: elements are n-by-n real matrices."""

    name = "matrix-group"
    tol = 1e-10

    def __init__(self, n):
        self.n = n

    @property
    def identity(self):
        return np.eye(self.n)

    @property
    def dim(self):
        return len(self.algebra_basis())

    def algebra_basis(self):
        raise NotImplementedError

    def membership_residual(self, g):
        raise NotImplementedError

    def algebra_residual(self, V):
        """Distance of V from span of the algebra basis (ambient coords)."""
        basis = [B.ravel() for B in self.algebra_basis()]
        A = np.stack(basis, axis=1)
        v = np.array([value(c) for c in np.asarray(V).ravel()], dtype=float)
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        return float(np.max(np.abs(A @ coef - v)))

    def check_algebra(self, V):
        if self.algebra_residual(V) > self.tol:
            raise InvalidTangentError(f"matrix not in the Lie algebra of {self.name}")

    def algebra_coords(self, V):
        A = np.stack([B.ravel() for B in self.algebra_basis()], axis=1)
        v = np.array([value(c) for c in np.asarray(V).ravel()], dtype=float)
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        return coef

    def from_algebra_coords(self, c):
        out = np.zeros((self.n, self.n))
        for ci, B in zip(c, self.algebra_basis()):
            out = out + ci * B
        return out

    def exp(self, V):
        return expm_series(V)

    def log(self, g):
        raise NotImplementedError

    def adjoint(self, k, V):
        return k @ V @ mat_inv(k)

    def project(self, g):
        return g

    def random_element(self, rng, scale=1.0):
        return self.exp(self.random_algebra(rng, scale))

    def random_algebra(self, rng, scale=1.0):
        c = rng.normal(0.0, scale, self.dim)
        return self.from_algebra_coords(c)

    def dist(self, g, h):
        d = np.asarray(g) - np.asarray(h)
        return max(abs(value(c)) for c in d.ravel())


class SO3(MatrixGroup):
    """Rotation group with closed-form (Rodrigues) exponential and
    logarithm; both dual-evaluable."""

    name = "SO3"

    def __init__(self):
        super().__init__(3)

    def algebra_basis(self):
        return [so3_hat(e) for e in np.eye(3)]

    def membership_residual(self, g):
        gv = np.array([[value(c) for c in row] for row in np.asarray(g)])
        r = np.max(np.abs(gv.T @ gv - np.eye(3)))
        return float(max(r, abs(np.linalg.det(gv) - 1.0)))

    def exp(self, V):
        V = np.asarray(V)
        w = so3_vee(V)
        theta2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
        a, b = _sinc_pair(theta2)
        eye = np.eye(3) if V.dtype != object else np.array(
            [[1.0 if i == j else 0.0 for j in range(3)] for i in range(3)], dtype=object)
        return eye + a * V + b * (V @ V)

    def log(self, g):
        g = np.asarray(g)
        tr = g[0, 0] + g[1, 1] + g[2, 2]
        c = (tr - 1.0) / 2.0
        skew = np.array([g[2, 1] - g[1, 2], g[0, 2] - g[2, 0], g[1, 0] - g[0, 1]])
        s = dm.sqrt(skew[0] ** 2 + skew[1] ** 2 + skew[2] ** 2) / 2.0
        theta = dm.atan2(s, c)
        if value(theta) > math.pi - 1e-6:
            raise OutOfChartError("rotation angle at injectivity boundary of log")
        if value(theta) < 1e-8:
            # log(g) ~ skew-part/2 * (1 + theta^2/6)
            coef = 0.5 * (1.0 + theta * theta / 6.0)
        else:
            coef = theta / (2.0 * dm.sin(theta))
        return coef * (g - _transpose(g))

    def project(self, g):
        gv = np.asarray(g, dtype=float)
        u, _, vt = np.linalg.svd(gv)
        r = u @ vt
        if np.linalg.det(r) < 0:
            u[:, -1] *= -1
            r = u @ vt
        return r


def _transpose(g):
    g = np.asarray(g)
    out = np.empty_like(g)
    for i in range(g.shape[0]):
        for j in range(g.shape[1]):
            out[i, j] = g[j, i]
    return out


class Heisenberg3(MatrixGroup):
    """Upper unitriangular 3x3 group; exp and log are finite series, so
    every identity here holds to round-off."""

    name = "Heisenberg3"

    def __init__(self):
        super().__init__(3)

    def algebra_basis(self):
        E = np.zeros((3, 3, 3))
        E[0][0, 1] = 1.0
        E[1][1, 2] = 1.0
        E[2][0, 2] = 1.0
        return list(E)

    def membership_residual(self, g):
        gv = np.array([[value(c) for c in row] for row in np.asarray(g)])
        r = np.max(np.abs(np.tril(gv, -1)))
        return float(max(r, np.max(np.abs(np.diag(gv) - 1.0))))

    def exp(self, V):
        V = np.asarray(V)
        eye = np.eye(3) if V.dtype != object else np.array(
            [[1.0 if i == j else 0.0 for j in range(3)] for i in range(3)], dtype=object)
        return eye + V + (V @ V) / 2.0

    def log(self, g):
        g = np.asarray(g)
        eye = np.eye(3) if g.dtype != object else np.array(
            [[1.0 if i == j else 0.0 for j in range(3)] for i in range(3)], dtype=object)
        N = g - eye
        return N - (N @ N) / 2.0


class GeneralLinearSubgroup(MatrixGroup):
    """Catch-all: a subgroup of GL(n) cut out by a membership predicate,
    with series exponential and Schur-free log via scipy (float only)."""

    name = "GL-subgroup"

    def __init__(self, n, basis, membership):
        super().__init__(n)
        self._basis = [np.asarray(B, dtype=float) for B in basis]
        self._membership = membership

    def algebra_basis(self):
        return self._basis

    def membership_residual(self, g):
        gv = np.array([[value(c) for c in row] for row in np.asarray(g)])
        return float(self._membership(gv))

    def log(self, g):
        from scipy.linalg import logm

        gv = np.asarray(g, dtype=float)
        L = np.real(logm(gv))
        if self.algebra_residual(L) > 1e-8:
            raise OutOfChartError("log left the Lie algebra (outside chart?)")
        return L


def make_group(name):
    if name.lower() == "so3":
        return SO3()
    if name.lower() in ("heisenberg3", "heisenberg"):
        return Heisenberg3()
    raise ValueError(f"unknown matrix group {name!r}")


# ---------------------------------------------------------------------------
# tangent vectors


class TangentVector:
    """A tangent vector: base point plus vector, both coordinate arrays.

    For matrix groups the vector is an ambient matrix at the base
    element g, constrained to g*h (checked on demand).
    """

    __slots__ = ("base", "vec")

    def __init__(self, base, vec):
        self.base = base
        self.vec = vec

    def __repr__(self):
        return f"TangentVector(base={self.base!r}, vec={self.vec!r})"


def group_tangent_residual(group: MatrixGroup, g, W):
    """Residual of W in g * Lie(H)."""
    V = mat_inv(np.asarray(g)) @ np.asarray(W)
    return group.algebra_residual(V)
