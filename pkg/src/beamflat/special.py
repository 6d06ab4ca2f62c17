"""Sine integral Si(x) = int_0^x sin(t)/t dt.

Power series for |x| <= 4, and the continued fraction of the complex
exponential integral E1(ix) beyond that (modified Lentz iteration).  Both
branches are accurate to a few ulps of pi/2 over the real line.
"""

import numpy as np

_SERIES_LIMIT = 4.0
_SERIES_TERMS = 32
_CF_MAX_ITER = 200
_TINY = 1e-300


def _si_series(x):
    x2 = x * x
    term = x.copy()  # x^(2k+1) / (2k+1)!
    total = x.copy()
    for k in range(1, _SERIES_TERMS):
        term = -term * x2 / ((2 * k) * (2 * k + 1))
        total += term / (2 * k + 1)
    return total


def _si_cfrac(x):
    # E1(ix) = exp(-ix) * h, with h the continued fraction below; x > 0.
    b = 1.0 + 1j * x
    c = np.full(x.shape, 1.0 / _TINY, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, _CF_MAX_ITER):
        a = -float((i - 1) ** 2)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > 1e-16
        if not active.any():
            break
    h = (np.cos(x) - 1j * np.sin(x)) * h
    return 0.5 * np.pi + h.imag


def sine_integral(x):
    """Sine integral, vectorised over ``x``; odd in ``x``."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(np.atleast_1d(x))
    out = np.empty_like(ax)
    small = ax <= _SERIES_LIMIT
    if small.any():
        out[small] = _si_series(ax[small])
    if (~small).any():
        out[~small] = _si_cfrac(ax[~small])
    out = np.copysign(out, np.atleast_1d(x))
    return out.reshape(x.shape) if x.ndim else float(out[0])
