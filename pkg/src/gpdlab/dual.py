"""Forward-mode dual numbers and scalar math that accepts them.

A ``Dual`` carries a value and a directional-derivative coefficient.
Both slots may themselves be duals, which yields exact second
derivatives of composite expressions (two nesting levels are enough for
everything in this package).

The arithmetic core is available as a compiled extension
(``gpdlab._dualaccel``); the pure-Python class below is the fallback and
the reference semantics.  Set ``GPDLAB_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import math
import os

import numpy as _np

__all__ = [
    "Dual", "BACKEND", "value", "deriv", "sin", "cos", "tan", "exp", "log",
    "sqrt", "atan2", "asin", "acos", "wrap_2pi", "wrap_pm_pi", "primal",
]


class _PyDual:
    __slots__ = ("re", "eps")

    def __init__(self, re, eps=0.0):
        self.re = re
        self.eps = eps

    def __repr__(self):
        return f"Dual({self.re!r}, {self.eps!r})"

    def __add__(self, other):
        if isinstance(other, _PyDual):
            return _PyDual(self.re + other.re, self.eps + other.eps)
        if isinstance(other, _np.ndarray):
            return NotImplemented
        return _PyDual(self.re + other, self.eps)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, _PyDual):
            return _PyDual(self.re - other.re, self.eps - other.eps)
        if isinstance(other, _np.ndarray):
            return NotImplemented
        return _PyDual(self.re - other, self.eps)

    def __rsub__(self, other):
        return _PyDual(other - self.re, -self.eps)

    def __mul__(self, other):
        if isinstance(other, _PyDual):
            return _PyDual(self.re * other.re,
                           self.re * other.eps + self.eps * other.re)
        if isinstance(other, _np.ndarray):
            return NotImplemented
        return _PyDual(self.re * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, _PyDual):
            inv = 1.0 / other.re
            q = self.re * inv
            return _PyDual(q, (self.eps - q * other.eps) * inv)
        if isinstance(other, _np.ndarray):
            return NotImplemented
        return _PyDual(self.re / other, self.eps / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.re
        q = other * inv
        return _PyDual(q, -q * self.eps * inv)

    def __neg__(self):
        return _PyDual(-self.re, -self.eps)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("Dual ** only supports integer exponents")
        if n == 0:
            return _PyDual(1.0, 0.0)
        if n < 0:
            return 1.0 / (self ** (-n))
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def __abs__(self):
        return _PyDual(abs(self.re), self.eps if value(self.re) >= 0 else -self.eps)

    # comparisons act on the value part only
    def __eq__(self, other):
        return value(self) == value(other)

    def __ne__(self, other):
        return value(self) != value(other)

    def __hash__(self):
        return hash(value(self))

    def __lt__(self, other):
        return value(self) < value(other)

    def __le__(self, other):
        return value(self) <= value(other)

    def __gt__(self, other):
        return value(self) > value(other)

    def __ge__(self, other):
        return value(self) >= value(other)

    def __float__(self):
        return float(value(self))


if os.environ.get("GPDLAB_PURE") == "1":
    Dual = _PyDual
    BACKEND = "python"
else:
    try:
        from ._dualaccel import Dual  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        Dual = _PyDual
        BACKEND = "python"


def value(x):
    """Strip all dual layers, returning the underlying float."""
    while isinstance(x, (Dual, _PyDual)):
        x = x.re
    return x


def deriv(x):
    """First-order derivative coefficient (0.0 for plain numbers)."""
    if isinstance(x, (Dual, _PyDual)):
        return x.eps
    return 0.0


def primal(x):
    """Strip exactly one dual layer (identity on plain numbers).  The
    counterpart of :func:`deriv` when duals are nested."""
    if isinstance(x, (Dual, _PyDual)):
        return x.re
    return x


def _is_dual(x):
    return isinstance(x, (Dual, _PyDual))


def sin(x):
    if _is_dual(x):
        return Dual(sin(x.re), cos(x.re) * x.eps)
    return math.sin(x)


def cos(x):
    if _is_dual(x):
        return Dual(cos(x.re), -sin(x.re) * x.eps)
    return math.cos(x)


def tan(x):
    return sin(x) / cos(x)


def exp(x):
    if _is_dual(x):
        e = exp(x.re)
        return Dual(e, e * x.eps)
    return math.exp(x)


def log(x):
    if _is_dual(x):
        return Dual(log(x.re), x.eps / x.re)
    return math.log(x)


def sqrt(x):
    if _is_dual(x):
        r = sqrt(x.re)
        return Dual(r, x.eps / (2.0 * r))
    return math.sqrt(x)


def atan2(y, x):
    if _is_dual(y) or _is_dual(x):
        yv = y.re if _is_dual(y) else y
        xv = x.re if _is_dual(x) else x
        yd = y.eps if _is_dual(y) else 0.0
        xd = x.eps if _is_dual(x) else 0.0
        denom = xv * xv + yv * yv
        return Dual(atan2(yv, xv), (xv * yd - yv * xd) / denom)
    return math.atan2(y, x)


def asin(x):
    if _is_dual(x):
        return Dual(asin(x.re), x.eps / sqrt(1.0 - x.re * x.re))
    return math.asin(x)


def acos(x):
    if _is_dual(x):
        return Dual(acos(x.re), -x.eps / sqrt(1.0 - x.re * x.re))
    return math.acos(x)


_TWO_PI = 2.0 * math.pi


def wrap_2pi(x):
    """Reduce to [0, 2pi).  The shift is locally constant, so derivative
    information passes through untouched."""
    if _is_dual(x):
        return x + (wrap_2pi(value(x)) - value(x))
    return x % _TWO_PI


def wrap_pm_pi(x):
    """Reduce to (-pi, pi]; derivative-transparent like :func:`wrap_2pi`."""
    if _is_dual(x):
        return x + (wrap_pm_pi(value(x)) - value(x))
    r = x % _TWO_PI
    return r if r <= math.pi else r - _TWO_PI
