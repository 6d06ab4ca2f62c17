"""Gevrey-class rest-to-rest transition and its derivative jets.

The transition rises from 0 at ``t <= 0`` to 1 at ``t >= T`` as the
normalised running integral of the bump

    theta(s) = exp(-(s (1 - s))**(-epsilon)),   s = t / T,

which is a Gevrey function of order ``sigma = 1 + 1/epsilon``.  Its
derivatives of every order vanish outside ``(0, T)``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, JetOverflowError
from .jets import Jet, jet_exp, jet_pow
from .quadrature import integrate_intervals

#: exp(-x) underflows to zero in double precision beyond this.
_UNDERFLOW = 745.0
_PANELS = 256  # cumulative-integral table on [0, 1/2]
_GAUSS_NODES = np.polynomial.legendre.leggauss(24)


def _scaled_bump(s, epsilon):
    # theta(s) / theta(1/2); keeps the peak at 1 for large epsilon
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    a = np.where(inside, s * (1.0 - s), 0.25)
    with np.errstate(over="ignore", divide="ignore", under="ignore"):
        val = np.exp(4.0**epsilon - a ** (-epsilon))
    return np.where(inside, val, 0.0)


def bump_integrand(s, epsilon):
    """``exp(-(s(1-s))**-epsilon)`` inside ``(0, 1)``, zero elsewhere."""
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    a = np.where(inside, s * (1.0 - s), 0.5)
    with np.errstate(over="ignore", divide="ignore", under="ignore"):
        val = np.exp(-(a ** (-epsilon)))
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def _cumulative_table(epsilon):
    edges = np.linspace(0.0, 0.5, _PANELS + 1)
    floor = 1e-16 * (edges[1] - edges[0])
    pieces = integrate_intervals(lambda s: _scaled_bump(s, epsilon), edges, rtol=1e-14, atol=floor)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    return edges, cum


@dataclass(frozen=True)
class GevreyProfile:
    """Transition ``phi`` with shape parameter ``epsilon`` and duration ``T``.

    ``jet_order`` defaults to ``2 * n_max``, the highest derivative the
    truncated flat series consumes.  ``normalizer`` is ``int_0^1 theta``;
    internally the peak-scaled integral ``scaled_normalizer`` is used so
    that large ``epsilon`` does not underflow.
    """

    epsilon: float
    T: float
    n_max: int = 8
    jet_order: Optional[int] = None
    normalizer: float = field(init=False, repr=False)
    scaled_normalizer: float = field(init=False, repr=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.T > 0:
            raise ValueError("transition time T must be positive")
        if self.jet_order is None:
            object.__setattr__(self, "jet_order", 2 * int(self.n_max))
        if self.jet_order < 2:
            raise ValueError("jet_order must be at least 2")
        _, cum = _cumulative_table(float(self.epsilon))
        object.__setattr__(self, "scaled_normalizer", 2.0 * cum[-1])
        with np.errstate(under="ignore"):
            object.__setattr__(self, "normalizer", 2.0 * cum[-1] * np.exp(-(4.0**self.epsilon)))

    @property
    def sigma(self):
        """Gevrey order ``1 + 1/epsilon``."""
        return 1.0 + 1.0 / self.epsilon

    def require_series_order(self):
        """Raise unless ``sigma < 2`` (needed for the flat series to converge)."""
        if not self.sigma < 2.0:
            raise ConvergenceError(
                f"Gevrey order sigma={self.sigma:.4g} >= 2: flat series is not guaranteed to converge"
            )

    def with_jet_order(self, order):
        return GevreyProfile(self.epsilon, self.T, self.n_max, order)


def _half_integral(s, epsilon):
    """``int_0^s theta`` for ``s`` in ``[0, 1/2]``: table lookup plus a Gauss panel."""
    edges, cum = _cumulative_table(float(epsilon))
    width = edges[1] - edges[0]
    idx = np.clip(np.floor(s / width).astype(int), 0, _PANELS)
    left = edges[idx]
    xi, wi = _GAUSS_NODES
    half = 0.5 * (s - left)
    nodes = left[..., None] + half[..., None] * (xi + 1.0)
    part = (_scaled_bump(nodes, epsilon) * wi).sum(axis=-1) * half
    return cum[idx] + part


def gevrey_eval(profile, t):
    """Transition value ``phi(t)``; exactly 0 for ``t <= 0`` and 1 for ``t >= T``."""
    t = np.asarray(t, dtype=float)
    s = np.clip(t / profile.T, 0.0, 1.0)
    lower = s <= 0.5
    c = profile.scaled_normalizer
    left = _half_integral(np.where(lower, s, 0.0), profile.epsilon) / c
    right = 1.0 - _half_integral(np.where(lower, 0.0, 1.0 - s), profile.epsilon) / c
    out = np.where(lower, left, right)
    out = np.where(t <= 0.0, 0.0, np.where(t >= profile.T, 1.0, out))
    return float(out) if out.ndim == 0 else out


def bump_jet(s, epsilon, order):
    """Derivatives of ``theta(s) / theta(1/2)``, ``k = 0..order``, by jet arithmetic.

    Returns an array of shape ``(order + 1,) + s.shape``.  Points where
    ``theta`` underflows (and hence every derivative is below the smallest
    double) are exact zeros.
    """
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    a0 = np.where(inside, s * (1.0 - s), 0.25)
    with np.errstate(over="ignore", divide="ignore"):
        live = inside & (a0 ** (-epsilon) - 4.0**epsilon < _UNDERFLOW)
    s0 = np.where(live, s, 0.5)
    x = Jet.variable(s0, order)
    theta = jet_exp(4.0**epsilon - jet_pow(x * (1.0 - x), -epsilon))
    derivs = theta.derivatives()
    return np.where(live, derivs, 0.0)


@dataclass(frozen=True)
class DerivativeJet:
    t: object
    values: np.ndarray


def derivative_table(profile, t, order=None):
    """Array ``[phi, phi', ..., phi^(order)]`` evaluated at ``t``.

    Shape is ``(order + 1,) + t.shape``.  Order ``k >= 1`` uses
    ``theta^(k-1)(t/T) / (normalizer * T**k)`` (both factors peak-scaled).
    """
    order = profile.jet_order if order is None else int(order)
    t = np.asarray(t, dtype=float)
    out = np.empty((order + 1,) + t.shape)
    out[0] = gevrey_eval(profile, t)
    if order >= 1:
        # overflow is detected below and reported with its order
        with np.errstate(over="ignore", invalid="ignore"):
            theta = bump_jet(t / profile.T, profile.epsilon, order - 1)
            scale = profile.scaled_normalizer * profile.T ** np.arange(1, order + 1)
            out[1:] = theta / scale.reshape((-1,) + (1,) * t.ndim)
    bad = ~np.isfinite(out.reshape(order + 1, -1)).all(axis=1)
    if bad.any():
        raise JetOverflowError(int(np.argmax(bad)))
    return out


def derivative_jet(profile, t, order=None):
    """Jet ``[phi(t), phi'(t), ..., phi^(jet_order)(t)]`` at a single time."""
    return DerivativeJet(t=t, values=derivative_table(profile, np.asarray(float(t)), order))


@dataclass(frozen=True)
class GevreyFit:
    M: float
    K: float
    sigma: float
    orders: int
    sup_norms: np.ndarray


def derivative_sup_norms(profile, orders, grid_points=4001):
    """``sup_t |phi^(k+1)(t)|`` for ``k = 0..orders-1`` on a uniform grid."""
    t = np.linspace(0.0, profile.T, grid_points)
    table = derivative_table(profile, t, orders)[1:]
    nonzero = np.any(table != 0.0, axis=0)  # drop slices where the profile is flat
    if not nonzero.any():
        raise ValueError("all sampled derivatives vanish; nothing to fit")
    return np.abs(table[:, nonzero]).max(axis=1)


def _tighten(sup, sigma, log_k):
    k = np.arange(sup.size)
    log_fact = gammaln(k + 1.0)
    log_m = np.max(np.log(sup) - sigma * log_fact + k * log_k)
    return float(np.exp(log_m))


def estimate_gevrey_bounds(profile, orders=16, grid_points=4001):
    """Fit ``(M, K)`` with ``|phi^(k+1)| <= M (k!)**sigma / K**k`` for ``k < orders``.

    A least-squares line through ``log sup|phi^(k+1)| - sigma log k!``
    versus ``k`` fixes ``K``; ``M`` is then raised to the smallest value that
    bounds every sampled order.
    """
    if orders < 4:
        raise ValueError("need at least 4 orders for a bound fit")
    sup = derivative_sup_norms(profile, orders, grid_points)
    if not np.all(sup > 0):
        raise ValueError("degenerate fit: some derivative orders vanish identically")
    k = np.arange(orders)
    y = np.log(sup) - profile.sigma * gammaln(k + 1.0)
    slope, _ = np.polyfit(k, y, 1)
    log_k = -slope
    return _tighten(sup, profile.sigma, log_k), float(np.exp(log_k))


def fit_gevrey_growth(profile, orders=16, grid_points=4001):
    """Fit ``log sup|phi^(k+1)| = log M + sigma log k! - k log K`` with free ``sigma``."""
    sup = derivative_sup_norms(profile, orders, grid_points)
    k = np.arange(orders, dtype=float)
    design = np.column_stack([np.ones_like(k), gammaln(k + 1.0), -k])
    (log_m, sigma, log_k), *_ = np.linalg.lstsq(design, np.log(sup), rcond=None)
    return GevreyFit(M=float(np.exp(log_m)), K=float(np.exp(log_k)), sigma=float(sigma),
                     orders=orders, sup_norms=sup)


def jet_rows(profile, t):
    """CSV rows ``(t, phi, phi', ...)`` for plotting."""
    t = np.asarray(t, dtype=float)
    table = derivative_table(profile, t)
    return [(ti, *table[:, i]) for i, ti in enumerate(t)]
