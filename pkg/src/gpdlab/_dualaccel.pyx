# cython: language_level=3, boundscheck=False, wraparound=False
# cython: c_api_binop_methods=True
"""Compiled twin of the pure-Python dual-number class.

Fields stay object-typed so duals can nest (second derivatives); the
speedup comes from C-level attribute access and operator dispatch.
"""

import numpy as _np


cdef inline object _val(object x):
    while isinstance(x, Dual):
        x = (<Dual> x).re
    return x


cdef class Dual:
    cdef readonly object re
    cdef readonly object eps

    def __init__(self, re, eps=0.0):
        self.re = re
        self.eps = eps

    def __repr__(self):
        return f"Dual({self.re!r}, {self.eps!r})"

    def __add__(x, y):
        cdef Dual a, b
        if isinstance(x, _np.ndarray) or isinstance(y, _np.ndarray):
            return NotImplemented
        if isinstance(x, Dual):
            a = <Dual> x
            if isinstance(y, Dual):
                b = <Dual> y
                return Dual(a.re + b.re, a.eps + b.eps)
            return Dual(a.re + y, a.eps)
        b = <Dual> y
        return Dual(x + b.re, b.eps)

    def __sub__(x, y):
        cdef Dual a, b
        if isinstance(x, _np.ndarray) or isinstance(y, _np.ndarray):
            return NotImplemented
        if isinstance(x, Dual):
            a = <Dual> x
            if isinstance(y, Dual):
                b = <Dual> y
                return Dual(a.re - b.re, a.eps - b.eps)
            return Dual(a.re - y, a.eps)
        b = <Dual> y
        return Dual(x - b.re, -b.eps)

    def __mul__(x, y):
        cdef Dual a, b
        if isinstance(x, _np.ndarray) or isinstance(y, _np.ndarray):
            return NotImplemented
        if isinstance(x, Dual):
            a = <Dual> x
            if isinstance(y, Dual):
                b = <Dual> y
                return Dual(a.re * b.re, a.re * b.eps + a.eps * b.re)
            return Dual(a.re * y, a.eps * y)
        b = <Dual> y
        return Dual(x * b.re, x * b.eps)

    def __truediv__(x, y):
        cdef Dual a, b
        if isinstance(x, _np.ndarray) or isinstance(y, _np.ndarray):
            return NotImplemented
        cdef object inv, q
        if isinstance(x, Dual):
            a = <Dual> x
            if isinstance(y, Dual):
                b = <Dual> y
                inv = 1.0 / b.re
                q = a.re * inv
                return Dual(q, (a.eps - q * b.eps) * inv)
            return Dual(a.re / y, a.eps / y)
        b = <Dual> y
        inv = 1.0 / b.re
        q = x * inv
        return Dual(q, -q * b.eps * inv)

    def __neg__(self):
        return Dual(-self.re, -self.eps)

    def __pos__(self):
        return self

    def __pow__(x, n, z):
        if not isinstance(n, int):
            raise TypeError("Dual ** only supports integer exponents")
        if n == 0:
            return Dual(1.0, 0.0)
        if n < 0:
            return 1.0 / (x ** (-n))
        out = x
        for _ in range(n - 1):
            out = out * x
        return out

    def __abs__(self):
        if _val(self.re) >= 0:
            return Dual(abs(self.re), self.eps)
        return Dual(abs(self.re), -self.eps)

    def __richcmp__(x, y, int op):
        a = _val(x)
        b = _val(y)
        if op == 0:
            return a < b
        elif op == 1:
            return a <= b
        elif op == 2:
            return a == b
        elif op == 3:
            return a != b
        elif op == 4:
            return a > b
        else:
            return a >= b

    def __float__(self):
        return float(_val(self))
