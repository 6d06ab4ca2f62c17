"""Sinc blobs, lifting kernels and the regularised steady state.

A point force at ``x_j`` is smoothed into the blob
``phi_m(x - x_j) = sin(m (x - x_j)) / (pi (x - x_j))``.  The kernel ``I``
solves ``I'''' = phi_m(. - x_j)`` with ``I(0) = I'(1) = I''(0) = I'''(1) = 0``
through four nested integrals, and ``H = x**3/6 - x/2 + I`` lifts the
boundary input into the domain.  As ``m`` grows, ``y_bar * I`` approaches
the point-load deflection ``alpha_bar * G(x, x_j)``.

``I`` is evaluated either from its power series in ``m`` or by quadrature:
``I''' = (Si(m(x - x_j)) - Si(m(1 - x_j))) / pi`` followed by the three
outer integrations, collapsed into moment integrals of ``I'''``.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError
from .green import green_dx, green_eval
from .quadrature import integrate_intervals
from .special import sine_integral

#: Above this value of ``m * max(x_j, 1 - x_j)`` the series is abandoned.
SERIES_SWITCH = 30.0
SERIES_TOL = 1e-16


@dataclass(frozen=True)
class Blob:
    m: float
    center: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("blob parameter m must be positive")
        if not 0.0 < self.center <= 1.0:
            raise ValueError("blob center must lie in (0, 1]")


def blob_eval(blob, x):
    """``sin(m (x - x_j)) / (pi (x - x_j))``, equal to ``m / pi`` at the center."""
    d = np.asarray(x, dtype=float) - blob.center
    safe = np.where(d == 0.0, 1.0, d)
    out = np.where(d == 0.0, blob.m / np.pi, np.sin(blob.m * safe) / (np.pi * safe))
    return float(out) if out.ndim == 0 else out


def blob_mass(blob, a, b):
    """``int_a^b phi_m(x - x_j) dx`` through the sine integral."""
    m, c = blob.m, blob.center
    return float((sine_integral(m * (b - c)) - sine_integral(m * (a - c))) / np.pi)


@dataclass(frozen=True)
class LiftKernel:
    """Lifting kernel for one blob.

    ``mode`` is ``"auto"``, ``"series"`` or ``"quadrature"``; ``auto``
    picks the series only while ``m * max(x_j, 1 - x_j) <= 30``.
    """

    blob: Blob
    series_cutoff: int = 4000
    mode: str = "auto"

    def __post_init__(self):
        if self.mode not in ("auto", "series", "quadrature"):
            raise ValueError(f"unknown evaluation mode {self.mode!r}")

    @property
    def resolved_mode(self):
        if self.mode != "auto":
            return self.mode
        c = self.blob.center
        return "series" if self.blob.m * max(c, 1.0 - c) <= SERIES_SWITCH else "quadrature"


def _series_terms(m, xj, x, k):
    """Term ``k`` of the power series of ``I`` (vectorised over ``x``), in log space."""
    k = float(k)
    pref = (2 * k - 1) * np.log(m) - np.log(2 * k - 1) - np.log(np.pi)
    sign = 1.0 if int(k) % 2 else -1.0

    def piece(base, power, denom_fact):
        base = np.asarray(base, dtype=float)
        with np.errstate(divide="ignore"):
            lb = np.log(np.abs(base))
        val = np.exp(pref + power * lb - gammaln(denom_fact + 1.0))
        return np.where(base == 0.0, 0.0, val * np.sign(base) ** power)

    d = x - xj
    r = 1.0 - xj
    parts = (
        piece(d, 2 * k + 2, 2 * k + 2),
        -piece(r, 2 * k - 1, 2 * k - 1) * x**3 / 6.0,
        -piece(xj, 2 * k, 2 * k) * x**2 / 2.0,
        -piece(r, 2 * k + 1, 2 * k + 1) * x,
        piece(xj, 2 * k, 2 * k) * x,
        piece(r, 2 * k - 1, 2 * k - 1) * x / 2.0,
        -piece(xj, 2 * k + 2, 2 * k + 2) * np.ones_like(x),
    )
    term = sign * sum(parts)
    size = sum(np.abs(p) for p in parts)
    return term, size


def series_partial_sums(kernel, x, terms):
    """Partial sums ``S_1 .. S_terms`` of the power series of ``I`` at ``x``.

    Returns an array of shape ``(terms,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    m, xj = kernel.blob.m, kernel.blob.center
    out = np.empty((terms,) + x.shape)
    total = np.zeros(x.shape)
    for k in range(1, terms + 1):
        term, _ = _series_terms(m, xj, x, k)
        total = total + term
        out[k - 1] = total
    return out


def series_term_norms(kernel, x, terms):
    """``sup_x |term_k|`` for ``k = 1..terms``: successive partial-sum differences.

    Computed from the log-space terms directly, so it stays meaningful for
    large ``m`` where the floating-point partial sums themselves are lost
    to cancellation.
    """
    x = np.asarray(x, dtype=float)
    m, xj = kernel.blob.m, kernel.blob.center
    return np.array([np.abs(_series_terms(m, xj, x, k)[0]).max() for k in range(1, terms + 1)])


def _kernel_series(kernel, x):
    m, xj = kernel.blob.m, kernel.blob.center
    total = np.zeros(x.shape)
    past_peak = max(1, int(np.ceil(m)))  # terms grow until 2k ~ m * distance
    for k in range(1, kernel.series_cutoff + 1):
        term, size = _series_terms(m, xj, x, k)
        total = total + term
        scale = max(float(np.abs(total).max(initial=0.0)), np.finfo(float).tiny)
        if k >= past_peak and float(size.max(initial=0.0)) <= SERIES_TOL * scale:
            return total
    raise ConvergenceError(
        f"lifting series did not converge for m={m:g} within {kernel.series_cutoff} terms"
    )


def _third_derivative(kernel, t):
    m, xj = kernel.blob.m, kernel.blob.center
    return (sine_integral(m * (t - xj)) - sine_integral(m * (1.0 - xj))) / np.pi


def _moments(kernel, points):
    """Cumulative ``int_0^p t**q I'''(t) dt`` for ``q = 0, 1, 2`` at each point."""
    pts = np.unique(np.concatenate([np.asarray(points, dtype=float).ravel(), [0.0, 1.0]]))
    # split panels so every one is short compared with the blob wavelength
    step = min(0.05, 1.0 / max(kernel.blob.m, 1.0))
    fill = np.arange(pts[0], pts[-1], step)
    edges = np.unique(np.concatenate([pts, fill]))

    def integrand(t):
        f = _third_derivative(kernel, t)
        return np.stack([f, t * f, t * t * f])

    pieces = integrate_intervals(integrand, edges, rtol=1e-13, atol=1e-18)
    cum = np.concatenate([np.zeros((3, 1)), np.cumsum(pieces, axis=1)], axis=1)
    cum -= cum[:, [np.searchsorted(edges, 0.0)]]
    return edges, cum


def kernel_I_derivatives(kernel, x):
    """``(I, I', I'', I''')`` at ``x`` by quadrature.

    Collapsing the nested integrals with ``F_q(p) = int_0^p t**q I'''``::

        I''(x) = F_0(x)
        I'(x)  = x F_0(x) - F_1(x) + F_1(1) - F_0(1)
        I(x)   = x**2/2 F_0(x) - x F_1(x) + F_2(x)/2 + x (F_1(1) - F_0(1))

    The formulas also hold slightly outside ``[0, 1]``, which finite
    difference probes of the boundary values rely on.
    """
    x = np.asarray(x, dtype=float)
    edges, cum = _moments(kernel, x)
    at = np.searchsorted(edges, x)
    f0, f1, f2 = (cum[q][at] for q in range(3))
    one = np.searchsorted(edges, 1.0)
    g0, g1 = cum[0][one], cum[1][one]
    i3 = _third_derivative(kernel, x)
    i2 = f0
    i1 = x * f0 - f1 + g1 - g0
    i0 = 0.5 * x**2 * f0 - x * f1 + 0.5 * f2 + x * (g1 - g0)
    return i0, i1, i2, np.asarray(i3, dtype=float)


def _five_point(values, h):
    return (values[0] - 8.0 * values[1] + 8.0 * values[3] - values[4]) / (12.0 * h)


def boundary_residuals(kernel, h=1e-4):
    """Finite-difference probes of ``I(0), I'(1), I''(0), I'''(1)``.

    Each derivative is a five-point central difference of the next lower
    one, evaluated by quadrature on a stencil that straddles the boundary.
    """
    offsets = np.arange(-2, 3) * h
    at0 = kernel_I_derivatives(kernel, offsets)
    at1 = kernel_I_derivatives(kernel, 1.0 + offsets)
    return {
        "I(0)": float(at0[0][2]),
        "I'(1)": float(_five_point(at1[0], h)),
        "I''(0)": float(_five_point(at0[1], h)),
        "I'''(1)": float(_five_point(at1[2], h)),
    }


def kernel_I(kernel, x, mode=None):
    """Lifting kernel ``I(x)``: series or quadrature per ``kernel.resolved_mode``."""
    x = np.asarray(x, dtype=float)
    mode = mode or kernel.resolved_mode
    if mode == "series":
        out = _kernel_series(kernel, x)
    elif mode == "quadrature":
        out = kernel_I_derivatives(kernel, x)[0]
    else:
        raise ValueError(f"unknown evaluation mode {mode!r}")
    return float(out) if out.ndim == 0 else out


def kernel_H(kernel, x, mode=None):
    """``H(x) = x**3/6 - x/2 + I(x)``: ``H(0) = H'(1) = H''(0) = 0``, ``H'''(1) = 1``."""
    x = np.asarray(x, dtype=float)
    out = x**3 / 6.0 - 0.5 * x + kernel_I(kernel, x, mode)
    return float(out) if np.ndim(out) == 0 else out


def psi_steady(kernel, y_bar, x, mode=None):
    """Regularised steady state ``y_bar * I(x)``."""
    out = y_bar * np.asarray(kernel_I(kernel, x, mode))
    return float(out) if out.ndim == 0 else out


def delta_probe(blob, test_function, support=(0.0, 1.0)):
    """``int phi_m(x - x_j) v(x) dx`` over ``support`` (adaptive quadrature)."""
    a, b = support
    step = min(0.05, 1.0 / blob.m)
    edges = np.unique(np.concatenate([np.arange(a, b, step), [b, blob.center]]))
    edges = edges[(edges >= a) & (edges <= b)]
    pieces = integrate_intervals(lambda x: blob_eval(blob, x) * test_function(x), edges,
                                 rtol=1e-12, atol=1e-16)
    return float(np.sum(pieces))


@dataclass(frozen=True)
class GapRow:
    m: float
    position: float
    c0_gap: float
    c1_gap: float
    boundary_actuator: bool


@dataclass(frozen=True)
class GapReport:
    rows: list

    def gaps(self, position):
        sel = [r for r in self.rows if r.position == position]
        return np.array([r.c0_gap for r in sel]), np.array([r.c1_gap for r in sel])

    def monotone(self, position):
        c0, c1 = self.gaps(position)
        return bool(np.all(np.diff(c0) < 0) and np.all(np.diff(c1) < 0))


def theorem1_gap(plan, m_values: Sequence[float], actuators: Optional[Sequence[int]] = None,
                 x_grid=None):
    """Distance between ``y_bar_j I_{j,m}`` and ``alpha_bar_j G(., x_j)`` per ``m``.

    For every requested actuator ``j`` and every ``m`` reports the sup-norm
    gap of the values (C0) and of the slopes (C1) on ``x_grid``.  Actuators
    at ``x_j = 1`` are flagged: half of their blob mass lies outside the
    beam, so the gap does not close there.
    """
    if x_grid is None:
        x_grid = np.linspace(0.0, 1.0, 401)
    x_grid = np.asarray(x_grid, dtype=float)
    idx = range(plan.size) if actuators is None else actuators
    rows = []
    for j in idx:
        xj = float(plan.actuator_positions[j])
        ybar, abar = float(plan.y_bar[j]), float(plan.alpha_bar[j])
        grid = np.unique(np.concatenate([x_grid, [xj]]))
        target = abar * green_eval(grid, xj)
        target_dx = abar * green_dx(grid, xj)
        for m in m_values:
            kern = LiftKernel(Blob(float(m), xj), mode="quadrature")
            i0, i1, _, _ = kernel_I_derivatives(kern, grid)
            rows.append(GapRow(
                m=float(m),
                position=xj,
                c0_gap=float(np.abs(ybar * i0 - target).max()),
                c1_gap=float(np.abs(ybar * i1 - target_dx).max()),
                boundary_actuator=xj >= 1.0,
            ))
    return GapReport(rows)


def profile_rows(plan, m, x):
    """CSV rows ``(x, psi_bar^m(x), w_bar^d(x))`` for the superposed plan."""
    from .green import steady_shape

    x = np.asarray(x, dtype=float)
    psi = np.zeros_like(x)
    for j in range(plan.size):
        kern = LiftKernel(Blob(float(m), float(plan.actuator_positions[j])), mode="quadrature")
        psi += plan.y_bar[j] * kernel_I_derivatives(kern, x)[0]
    return list(zip(x, psi, steady_shape(plan, x)))
