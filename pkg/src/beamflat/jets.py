"""Truncated Taylor-series (jet) arithmetic.

A :class:`Jet` stores normalised Taylor coefficients ``c[k] = f^(k)(s0)/k!``
along axis 0; any trailing axes are independent expansion points, so one
jet evaluates a composition at many points at once.  Normalised
coefficients stay moderate where raw derivatives grow like ``k!``.
"""

import numpy as np


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @property
    def order(self):
        return self.c.shape[0] - 1

    @classmethod
    def variable(cls, s0, order):
        """Jet of the identity map ``s -> s`` expanded at ``s0``."""
        s0 = np.asarray(s0, dtype=float)
        c = np.zeros((order + 1,) + s0.shape)
        c[0] = s0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    def __neg__(self):
        return Jet(-self.c)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return Jet(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self.c, other.c
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(out.shape[0]):
            out[k] = sum(a[j] * b[k - j] for j in range(k + 1))
        return Jet(out)

    __rmul__ = __mul__

    def derivatives(self):
        """Raw derivatives ``f^(k)(s0)``, ``k = 0..order``."""
        with np.errstate(over="ignore", invalid="ignore"):
            fact = np.cumprod(np.maximum(np.arange(self.order + 1, dtype=float), 1.0))
            return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))


def jet_exp(a):
    """``exp`` of a jet: ``e_k = (1/k) sum_{j=1..k} j a_j e_{k-j}``."""
    c = a.c
    out = np.zeros_like(c)
    out[0] = np.exp(c[0])
    for k in range(1, c.shape[0]):
        acc = np.zeros_like(c[0])
        for j in range(1, k + 1):
            acc = acc + j * c[j] * out[k - j]
        out[k] = acc / k
    return Jet(out)


def jet_pow(a, p):
    """``a**p`` for a jet with non-vanishing constant term."""
    c = a.c
    out = np.zeros_like(c)
    out[0] = c[0] ** p
    for k in range(1, c.shape[0]):
        acc = np.zeros_like(c[0])
        for j in range(1, k + 1):
            acc = acc + (p * j - (k - j)) * c[j] * out[k - j]
        out[k] = acc / (k * c[0])
    return Jet(out)


def jet_log(a):
    """Natural log of a jet with positive constant term."""
    c = a.c
    out = np.zeros_like(c)
    out[0] = np.log(c[0])
    for k in range(1, c.shape[0]):
        acc = k * c[k]
        for j in range(1, k):
            acc = acc - j * out[j] * c[k - j]
        out[k] = acc / (k * c[0])
    return Jet(out)
