"""Batched adaptive Gauss-Legendre quadrature and composite Simpson helpers."""

import numpy as np
from scipy.integrate import simpson

_NODES = {}


def _gauss(n):
    if n not in _NODES:
        _NODES[n] = np.polynomial.legendre.leggauss(n)
    return _NODES[n]


def _panel(func, a, b, n):
    xi, wi = _gauss(n)
    half = 0.5 * (b - a)
    t = 0.5 * (a + b)[:, None] + half[:, None] * xi[None, :]
    vals = np.asarray(func(t.ravel()), dtype=float)
    vals = vals.reshape(vals.shape[:-1] + t.shape)
    return (vals * wi).sum(axis=-1) * half


def integrate_intervals(func, edges, *, rtol=1e-13, atol=1e-16, order=20, max_depth=40):
    """Integrate ``func`` over every interval ``[edges[i], edges[i+1]]``.

    ``func`` maps a flat array of abscissae to an array whose last axis
    matches it (extra leading axes give a vector-valued integrand).  Each
    interval is bisected until an ``order``-point and ``2*order``-point
    Gauss rule agree; all pending panels are evaluated in one batch.

    Returns an array of shape ``func_shape + (len(edges) - 1,)``.  Intervals
    may be reversed (``b < a``); their integral is then negative.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    owner = np.arange(a.size)
    result = None
    for _ in range(max_depth):
        if a.size == 0:
            break
        coarse = _panel(func, a, b, order)
        fine = _panel(func, a, b, 2 * order)
        if result is None:
            result = np.zeros(fine.shape[:-1] + (edges.size - 1,))
        err = np.abs(fine - coarse)
        scale = np.abs(fine)
        if err.ndim > 1:
            err = err.max(axis=tuple(range(err.ndim - 1)))
            scale = scale.max(axis=tuple(range(scale.ndim - 1)))
        done = err <= np.maximum(rtol * scale, atol)
        np.add.at(result, (..., owner[done]), fine[..., done])
        a, b, owner = a[~done], b[~done], owner[~done]
        mid = 0.5 * (a + b)
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
        owner = np.concatenate([owner, owner])
    else:
        if a.size:
            raise RuntimeError("adaptive quadrature did not converge")
    return result


def simpson_uniform(values, x, axis=-1):
    """Composite Simpson rule on a uniform grid (odd number of nodes)."""
    return simpson(values, x=x, axis=axis)
