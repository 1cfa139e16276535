"""Truncated Taylor series ("jets") with elementwise batching.

A :class:`Jet` of order ``N`` carries the normalized coefficients
``f(x0), f'(x0), f''(x0)/2!, ..., f^(N)(x0)/N!`` for a whole array of
expansion points at once.  Arithmetic on jets is exact up to the
truncation order, so building a closed-form expression out of jets gives
the value and every derivative up to ``N`` in one pass, with no finite
differences.
"""
from __future__ import annotations

from math import factorial

import numpy as np

from . import _accel


def _as_coeffs(c):
    return np.ascontiguousarray(c, dtype=np.complex128)


class Jet:
    __slots__ = ("coeffs",)
    __array_priority__ = 100  # numpy scalars defer to Jet operators

    def __init__(self, coeffs):
        self.coeffs = _as_coeffs(coeffs)

    # construction -------------------------------------------------------
    @classmethod
    def variable(cls, x0, order):
        x0 = np.asarray(x0, dtype=np.complex128)
        c = np.zeros((order + 1,) + x0.shape, dtype=np.complex128)
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order, shape=()):
        c = np.zeros((order + 1,) + tuple(shape), dtype=np.complex128)
        c[0] = value
        return cls(c)

    # basic properties ---------------------------------------------------
    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    @property
    def value(self):
        return self.coeffs[0]

    def deriv(self, m):
        """m-th derivative at the expansion points."""
        if m > self.order:
            raise ValueError(f"jet of order {self.order} has no derivative {m}")
        return factorial(m) * self.coeffs[m]

    def derivatives(self):
        """All derivatives 0..order stacked along the first axis."""
        f = np.array([factorial(n) for n in range(self.order + 1)], dtype=float)
        return self.coeffs * f.reshape((-1,) + (1,) * len(self.shape))

    def truncate(self, order):
        return Jet(self.coeffs[: order + 1])

    def derivative(self):
        """Jet of f' (one order lower)."""
        n = np.arange(1, self.order + 1, dtype=float)
        return Jet(self.coeffs[1:] * n.reshape((-1,) + (1,) * len(self.shape)))

    def shift(self, m=1):
        """Divide by (x - x0)**m, dropping the m leading coefficients.

        Only meaningful when those coefficients vanish, which is the case at a
        removable zero of a numerator/denominator pair.
        """
        return Jet(self.coeffs[m:])

    def evaluate(self, t):
        """Sum the series at offset ``t`` from the expansion point (Horner)."""
        t = np.asarray(t)
        acc = np.zeros(np.broadcast_shapes(t.shape, self.shape), dtype=np.complex128)
        for n in range(self.order, -1, -1):
            acc = acc * t + self.coeffs[n]
        return acc

    # arithmetic ---------------------------------------------------------
    def _flat(self):
        return self.coeffs.reshape(self.order + 1, -1)

    def _binary(self, other, kernel):
        a, b = np.broadcast_arrays(self.coeffs, other.coeffs)
        shape = a.shape
        a = _as_coeffs(a).reshape(shape[0], -1)
        b = _as_coeffs(b).reshape(shape[0], -1)
        return Jet(kernel(a, b).reshape(shape))

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                n = min(self.order, other.order)
                return self.truncate(n), other.truncate(n)
            return self, other
        return None

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is not None:
            return Jet(pair[0].coeffs + pair[1].coeffs)
        c = self.coeffs.copy()
        c[0] = c[0] + other
        return Jet(c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        pair = self._coerce(other)
        if pair is not None:
            a, b = pair
            return a._binary(b, _accel.series_mul)
        return Jet(self.coeffs * np.asarray(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        pair = self._coerce(other)
        if pair is not None:
            a, b = pair
            return a._binary(b, _accel.series_div)
        return Jet(self.coeffs / np.asarray(other))

    def __rtruediv__(self, other):
        num = Jet.constant(other, self.order, self.shape)
        return num / self

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape})"


def _unary(kernel, g, *args):
    shape = g.coeffs.shape
    out = kernel(g._flat(), *args)
    if isinstance(out, tuple):
        return tuple(Jet(o.reshape(shape)) for o in out)
    return Jet(out.reshape(shape))


def exp(g):
    return _unary(_accel.series_exp, g)


def sinh_cosh(g):
    return _unary(_accel.series_sinhcosh, g, False)


def sin_cos(g):
    return _unary(_accel.series_sinhcosh, g, True)


def sinh(g):
    return sinh_cosh(g)[0]


def cosh(g):
    return sinh_cosh(g)[1]


def sin(g):
    return sin_cos(g)[0]


def cos(g):
    return sin_cos(g)[1]


# below this |a| the two-term series of sinh(a g)/a is exact in double precision
SMALL_PARAM = 1e-8


def sinhc(a, g):
    """sinh(a*g)/a, continued analytically to ``g`` at a = 0."""
    if a == 0:
        return g
    if abs(a) < SMALL_PARAM:
        return g + (a * a / 6.0) * (g * g * g)
    return sinh(a * g) / a
