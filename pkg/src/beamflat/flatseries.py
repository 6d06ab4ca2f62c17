"""Flatness-based feedforward for one actuator.

With flat output ``y(t) = y_bar * phi(t)`` the boundary-actuated beam
(zero data, ``u_xxx(1, t) = g(t)``) has the full-state trajectory

    u(x, t) = y_bar P(x) phi(t) + y_bar sum_n Phi_n(x) phi^(2n)(t)

and boundary input

    g(t) = -y_bar phi(t) + y_bar sum_n Psi_n phi^(2n)(t),

where ``P(x) = x/2 - x**3/6`` and ``Phi_n``, ``Psi_n`` are the polynomial and
scalar coefficients built below.  ``Phi_n'''' = -Phi_{n-1}`` (with
``Phi_0 = P``) makes the series telescope against ``u_tt``.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import gammaln

from .gevrey import GevreyProfile, derivative_table, estimate_gevrey_bounds

#: Largest factorial argument kept as an exact integer.
EXACT_FACTORIAL_LIMIT = 35
#: Relative size below which a series term ends the summation.
EARLY_STOP = 1e-14
_SUP_GRID = np.linspace(0.0, 1.0, 4001)


def _inv_fact_product(a, b):
    """``1 / (a! b!)`` as a double; exact rational if both fit the table."""
    if max(a, b) <= EXACT_FACTORIAL_LIMIT:
        return float(Fraction(1, factorial(a) * factorial(b)))
    return float(np.exp(-gammaln(a + 1.0) - gammaln(b + 1.0)))


@lru_cache(maxsize=None)
def phi_polynomial(n):
    """Power-basis coefficients of ``Phi_n`` (index = power of ``x``)."""
    if n < 1:
        raise ValueError("series index n starts at 1")
    c = np.zeros(4 * n + 4)
    sign = -1.0 if n % 2 else 1.0
    for k in range(n + 1):
        c[4 * k + 1] += sign * _inv_fact_product(4 * k + 1, 4 * (n - k) + 2)
        c[4 * k + 3] -= sign * _inv_fact_product(4 * k + 3, 4 * (n - k))
    c.flags.writeable = False
    return c


BASE_POLYNOMIAL = np.array([0.0, 0.5, 0.0, -1.0 / 6.0])


def base_poly(x, deriv=0):
    """``P(x) = x/2 - x**3/6`` or its ``deriv``-th derivative."""
    c = npoly.polyder(BASE_POLYNOMIAL, deriv) if deriv else BASE_POLYNOMIAL
    return npoly.polyval(np.asarray(x, dtype=float), c)


def coeff_phi(n, x, deriv=0):
    """Spatial coefficient ``Phi_n(x)`` (or a spatial derivative of it)."""
    c = phi_polynomial(n)
    if deriv:
        c = npoly.polyder(c, deriv)
    return npoly.polyval(np.asarray(x, dtype=float), c)


def _abs_poly(c, x, deriv):
    c = npoly.polyder(c, deriv) if deriv else c
    return npoly.polyval(np.abs(x), np.abs(c))


@lru_cache(maxsize=None)
def coeff_psi(n):
    """Boundary coefficient ``Psi_n``, the input weight of ``phi^(2n)``.

    ``(-1)^n [sum_{k=1..n} 1/((4k-2)!(4(n-k)+2)!) - sum_{k=0..n} 1/((4k)!(4(n-k))!)]``.
    """
    if n < 1:
        raise ValueError("series index n starts at 1")
    sign = -1 if n % 2 else 1
    if 4 * n + 2 <= EXACT_FACTORIAL_LIMIT:
        first = sum(Fraction(1, factorial(4 * k - 2) * factorial(4 * (n - k) + 2)) for k in range(1, n + 1))
        second = sum(Fraction(1, factorial(4 * k) * factorial(4 * (n - k))) for k in range(n + 1))
        return float(sign * (first - second))
    first = sum(_inv_fact_product(4 * k - 2, 4 * (n - k) + 2) for k in range(1, n + 1))
    second = sum(_inv_fact_product(4 * k, 4 * (n - k)) for k in range(n + 1))
    return sign * (first - second)


@lru_cache(maxsize=None)
def phi_sup(n):
    """``max_{x in [0,1]} |Phi_n(x)|`` on a 4001-point grid."""
    return float(np.abs(coeff_phi(n, _SUP_GRID)).max())


@dataclass(frozen=True)
class FlatTrajectory:
    """Feedforward trajectory of actuator ``actuator_index``.

    ``strict=False`` skips the ``sigma < 2`` check; only the truncation
    diagnostics should be run on such a trajectory.
    """

    y_bar: float
    profile: GevreyProfile
    n_max: Optional[int] = None
    actuator_index: int = 0
    early_stop: bool = True
    strict: bool = True

    def __post_init__(self):
        if self.n_max is None:
            object.__setattr__(self, "n_max", int(self.profile.n_max))
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.profile.jet_order < 2 * self.n_max:
            raise ValueError(
                f"profile jet_order {self.profile.jet_order} < 2*n_max = {2 * self.n_max}"
            )
        if self.strict:
            self.profile.require_series_order()


def _sum_series(leading, terms, early_stop):
    total = np.array(leading, dtype=float)
    used = 0
    for term in terms:
        if early_stop and used and np.max(np.abs(term)) < EARLY_STOP * np.max(np.abs(total)):
            break
        total = total + term
        used += 1
    return total, used


def state_series(traj, x, t, dx=0, dt=0):
    """Truncated full-state trajectory ``u(x, t)`` (or a mixed derivative).

    ``x`` and ``t`` broadcast against each other.  Spatial derivatives are
    taken analytically on the polynomials, time derivatives from the jets.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    xb, tb = np.broadcast_arrays(x, t)
    jets = derivative_table(traj.profile, tb, 2 * traj.n_max + dt)
    y = traj.y_bar
    leading = y * base_poly(xb, dx) * jets[dt]
    terms = (y * coeff_phi(n, xb, dx) * jets[2 * n + dt] for n in range(1, traj.n_max + 1))
    total, _ = _sum_series(leading, terms, traj.early_stop and not (dx or dt))
    return float(total) if total.ndim == 0 else total


def unit_input(profile, n_max, t, dt=0, early_stop=True):
    """Input for ``y_bar = 1``: ``-phi(t) + sum_n Psi_n phi^(2n)(t)``."""
    t = np.asarray(t, dtype=float)
    jets = derivative_table(profile, t, 2 * n_max + dt)
    terms = (coeff_psi(n) * jets[2 * n + dt] for n in range(1, n_max + 1))
    total, _ = _sum_series(-jets[dt], terms, early_stop and not dt)
    return total


def input_series(traj, t, dt=0):
    """Boundary input ``g(t)``; equals ``-y_bar`` once ``t >= T``."""
    out = traj.y_bar * unit_input(traj.profile, traj.n_max, t, dt, traj.early_stop)
    return float(out) if np.ndim(out) == 0 else out


def input_dropped_term(traj, t):
    """First correction term left out of :func:`input_series` at ``t``.

    The summation ends at ``n_max`` or earlier by the relative early stop;
    the returned array is ``|y_bar Psi_n phi^(2n)(t)|`` for the first
    ``n`` not summed.
    """
    t = np.asarray(t, dtype=float)
    n_max = traj.n_max
    jets = derivative_table(traj.profile, t, 2 * n_max + 2)
    terms = [coeff_psi(n) * jets[2 * n] for n in range(1, n_max + 1)]
    _, used = _sum_series(-jets[0], terms, traj.early_stop)
    n = used + 1
    out = np.abs(traj.y_bar * coeff_psi(n) * jets[2 * n])
    return float(out) if out.ndim == 0 else out


def pde_residual(traj, x, t):
    """Residual ``u_tt + u_xxxx`` of the truncated series and its estimate.

    Returns ``(residual, estimate, rounding)``.  The telescoping leaves
    ``y_bar * Phi_N(x) * phi^(2N+2)(t)``; ``estimate`` is the sup over ``x``
    of the fourth spatial derivative of the first dropped term,
    ``|y_bar| max|Phi_N| |phi^(2N+2)(t)|``.  ``rounding`` bounds the
    floating-point error of the cancelling sum.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    xb, tb = np.broadcast_arrays(x, t)
    n_max = traj.n_max
    jets = derivative_table(traj.profile, tb, 2 * n_max + 2)
    y = traj.y_bar
    parts = [y * base_poly(xb) * jets[2]]
    sizes = [abs(y) * _abs_poly(BASE_POLYNOMIAL, xb, 0) * np.abs(jets[2])]
    for n in range(1, n_max + 1):
        c = phi_polynomial(n)
        parts.append(y * coeff_phi(n, xb) * jets[2 * n + 2])
        parts.append(y * coeff_phi(n, xb, 4) * jets[2 * n])
        sizes.append(abs(y) * _abs_poly(c, xb, 0) * np.abs(jets[2 * n + 2]))
        sizes.append(abs(y) * _abs_poly(c, xb, 4) * np.abs(jets[2 * n]))
    residual = np.sum(parts, axis=0)
    magnitude = np.sum(sizes, axis=0)
    estimate = abs(y) * phi_sup(n_max) * np.abs(jets[2 * n_max + 2])
    rounding = 8 * (2 * n_max + 1) * np.finfo(float).eps * magnitude
    return residual, estimate, rounding


def log_majorant(n, sigma, M, K):
    """``log(2 M 16^n ((2n)!)^sigma / (K^(2n) (4n+1)!))``."""
    n = np.asarray(n, dtype=float)
    return (np.log(2.0 * M) + n * np.log(16.0) + sigma * gammaln(2 * n + 1.0)
            - 2 * n * np.log(K) - gammaln(4 * n + 2.0))


def majorant_roots(n, sigma, M, K):
    """n-th roots of the term majorant (Cauchy-Hadamard test quantity)."""
    n = np.asarray(n, dtype=float)
    return np.exp(log_majorant(n, sigma, M, K) / n)


def series_converges(sigma, K):
    """Convergence verdict from the majorant's root limit."""
    if sigma < 2.0:
        return True
    if sigma == 2.0:
        return K * K > 1.0
    return False


@dataclass(frozen=True)
class TruncationReport:
    n: np.ndarray
    empirical: np.ndarray
    majorant: np.ndarray
    empirical_roots: np.ndarray
    tail_n: np.ndarray
    tail_roots: np.ndarray
    sigma: float
    M: float
    K: float
    convergent: bool
    dominated: bool
    decaying: bool

    @property
    def guaranteed(self):
        """``sigma < 2``: convergence holds for every bound constant ``K``."""
        return self.sigma < 2.0

    @property
    def ok(self):
        return self.guaranteed and self.convergent and self.dominated and self.decaying

    def rows(self):
        return list(zip(self.n, self.empirical, self.majorant, self.empirical_roots))


def truncation_diagnostic(traj, t_grid, bounds=None, tail=200):
    """Per-order term sizes of the state series against the analytic majorant.

    Parameters
    ----------
    traj : FlatTrajectory
    t_grid : array_like
        Sample times for ``sup_t``.
    bounds : (M, K), optional
        Gevrey bound constants; fitted over orders ``1..2*n_max`` if omitted.
    tail : int
        Largest ``n`` used to tabulate the majorant root trend.
    """
    prof = traj.profile
    n = np.arange(1, traj.n_max + 1)
    if bounds is None:
        bounds = estimate_gevrey_bounds(prof, max(4, 2 * traj.n_max))
    M, K = bounds
    jets = derivative_table(prof, np.asarray(t_grid, dtype=float), 2 * traj.n_max)
    y = abs(traj.y_bar)
    empirical = np.array([y * phi_sup(k) * np.abs(jets[2 * k]).max() for k in n])
    majorant = y * np.exp(log_majorant(n, prof.sigma, M, K))
    tail_n = np.arange(1, tail + 1)
    with np.errstate(divide="ignore"):
        emp_roots = np.where(empirical > 0, empirical ** (1.0 / n), 0.0)
    nz = empirical[empirical > 0]
    return TruncationReport(
        n=n,
        empirical=empirical,
        majorant=majorant,
        empirical_roots=emp_roots,
        tail_n=tail_n,
        tail_roots=majorant_roots(tail_n, prof.sigma, M, K),
        sigma=prof.sigma,
        M=float(M),
        K=float(K),
        convergent=series_converges(prof.sigma, K),
        dominated=bool(np.all(empirical <= majorant)),
        decaying=bool(nz.size < 2 or np.all(np.diff(nz) < 0)),
    )


def input_rows(trajectories, t):
    """CSV rows ``(t, g_1(t), ..., g_N(t))``."""
    t = np.asarray(t, dtype=float)
    cols = [input_series(tr, t) for tr in trajectories]
    return [(ti, *(c[i] for c in cols)) for i, ti in enumerate(t)]


def state_rows(traj, x, t):
    """CSV rows ``(x, t, u(x, t))`` over the grid ``x`` by ``t``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    u = state_series(traj, x[:, None], t[None, :])
    return [(xi, tj, u[i, j]) for i, xi in enumerate(x) for j, tj in enumerate(t)]
