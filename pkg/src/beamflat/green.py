"""Steady-state shape planning with the beam Green's function.

The beam is pinned at ``x = 0`` (``w = w_xx = 0``) and shear-hinged at
``x = 1`` (``w_x = w_xxx = 0``).  A point force of unit amplitude at ``xi``
produces the static deflection ``G(x, xi)``; superposing ``N`` such forces
and matching a desired shape at ``N`` collocation nodes gives a square
linear system for the steady actuator amplitudes.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateGeometryError, DomainError, PlanningError
from .quadrature import simpson_uniform

#: Solves whose 2-norm condition number exceeds this are rejected.
CONDITION_LIMIT = 1e12
#: Relative residual the amplitude solve must reach.
RESIDUAL_TARGET = 1e-9
#: Grid size for L1 interpolation errors.
L1_GRID_POINTS = 2001


def _check_unit(name, value, *, open_left, open_right=False):
    v = np.asarray(value, dtype=float)
    lo_bad = v <= 0.0 if open_left else v < 0.0
    hi_bad = v >= 1.0 if open_right else v > 1.0
    if np.any(lo_bad | hi_bad | ~np.isfinite(v)):
        left = "(" if open_left else "["
        right = ")" if open_right else "]"
        raise DomainError(f"{name} must lie in {left}0, 1{right}")
    return v


def green_eval(x, xi):
    """Static deflection at ``x`` due to a unit point force at ``xi``.

    Parameters
    ----------
    x : float or array_like
        Observation point(s) in ``[0, 1]``.
    xi : float or array_like
        Load position(s) in ``(0, 1]``; broadcasts against ``x``.

    Returns
    -------
    float or ndarray
        ``-x**3/6 + x*xi*(1 - xi/2)`` for ``x < xi`` and
        ``-xi**3/6 + xi*x*(1 - x/2)`` otherwise.
    """
    x = _check_unit("x", x, open_left=False)
    xi = _check_unit("xi", xi, open_left=True)
    out = np.where(
        x < xi,
        -x**3 / 6.0 + x * xi * (1.0 - 0.5 * xi),
        -xi**3 / 6.0 + xi * x * (1.0 - 0.5 * x),
    )
    return float(out) if out.ndim == 0 else out


def green_dx(x, xi):
    """Slope ``dG/dx`` of the Green's function."""
    x = _check_unit("x", x, open_left=False)
    xi = _check_unit("xi", xi, open_left=True)
    out = np.where(x < xi, -0.5 * x**2 + xi * (1.0 - 0.5 * xi), xi * (1.0 - x))
    return float(out) if out.ndim == 0 else out


def _check_distinct(name, nodes):
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 1:
        raise DegenerateGeometryError(f"{name} must be a non-empty 1-D sequence")
    if np.unique(nodes).size != nodes.size:
        raise DegenerateGeometryError(f"{name} contain duplicate positions: {nodes.tolist()}")
    return nodes


def build_influence(actuators, collocation=None):
    """Influence array with entry ``(i, j) = G(x_i, xi_j)``.

    Row ``i`` is the collocation node, column ``j`` the actuator, so that
    ``influence @ alpha`` is the superposed deflection at the nodes.  When
    ``collocation`` is omitted the actuator positions are used and the
    array is symmetric.
    """
    xi = _check_distinct("actuator positions", actuators)
    x = xi if collocation is None else _check_distinct("collocation points", collocation)
    if x.size != xi.size:
        raise DegenerateGeometryError("need as many collocation points as actuators")
    return green_eval(x[:, None], xi[None, :])


@dataclass(frozen=True)
class DesiredShape:
    """A target deflection profile on ``[0, 1]``.

    ``params`` keeps the closed-form description (if any) so that the
    shape can be serialised back into a scenario file.
    """

    func: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.func(x), dtype=float)
        return float(out) if out.ndim == 0 else out


def gaussian_sum_shape(terms):
    """Shape ``sum(a * exp(-r * (x - c)**2))`` from ``(a, c, r)`` triples."""
    terms = [tuple(float(v) for v in t) for t in terms]

    def func(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, c, r in terms:
            out = out + a * np.exp(-r * (x - c) ** 2)
        return out

    params = {
        "kind": "gaussian_sum",
        "terms": [{"amplitude": a, "center": c, "rate": r} for a, c, r in terms],
    }
    return DesiredShape(func, params)


def sampled_shape(x, w):
    """Piecewise-linear shape through tabulated samples."""
    xs = np.asarray(x, dtype=float)
    ws = np.asarray(w, dtype=float)
    order = np.argsort(xs)
    xs, ws = xs[order], ws[order]
    params = {"kind": "samples", "x": xs.tolist(), "w": ws.tolist()}
    return DesiredShape(lambda t: np.interp(t, xs, ws), params)


def zero_shape():
    return DesiredShape(lambda x: np.zeros_like(np.asarray(x, dtype=float)), {"kind": "zero"})


def three_bump_shape():
    """Micro-beam target: three downward Gaussian bumps, peak ~3.74e-3."""
    return gaussian_sum_shape([(-1e-3, 0.4, 100.0), (-2e-3, 0.6, 100.0), (-3e-3, 0.7, 400.0)])


def evenly_spaced(count):
    """``count`` interior actuator positions ``j / (count + 1)``."""
    if count < 1:
        raise DegenerateGeometryError("actuator count must be at least 1")
    return np.arange(1, count + 1) / (count + 1.0)


@dataclass(frozen=True)
class SteadyPlan:
    actuator_positions: np.ndarray
    collocation_points: np.ndarray
    influence: np.ndarray
    alpha_bar: np.ndarray
    y_bar: np.ndarray
    residual: float
    condition: float
    refinement_steps: int = 0

    @property
    def size(self):
        return self.actuator_positions.size


def _solve_refined(a, b, target=RESIDUAL_TARGET, max_steps=5):
    lu = scipy.linalg.lu_factor(a)
    x = scipy.linalg.lu_solve(lu, b)
    scale = max(np.abs(b).max(), np.finfo(float).tiny)
    steps = 0
    while True:
        r = b - a @ x
        rel = np.abs(r).max() / scale
        if rel <= target * 1e-3 or steps >= max_steps:
            return x, rel, steps
        x = x + scipy.linalg.lu_solve(lu, r)
        steps += 1


def solve_amplitudes(actuators, desired, collocation=None, *, condition_limit=CONDITION_LIMIT):
    """Solve ``[G] alpha = w_desired(x_i)`` for steady actuator amplitudes.

    Parameters
    ----------
    actuators : sequence of float
        Strictly increasing positions in ``(0, 1]``.
    desired : DesiredShape or callable
        Target deflection.
    collocation : sequence of float, optional
        Interpolation nodes; defaults to the actuator positions.
    condition_limit : float
        Reject the solve if the 2-norm condition number exceeds this.

    Returns
    -------
    SteadyPlan
        ``y_bar`` equals ``alpha_bar``: the steady flat-output amplitude of
        each actuator is its steady force.
    """
    xi = _check_distinct("actuator positions", actuators)
    if np.any(np.diff(xi) <= 0):
        raise DegenerateGeometryError("actuator positions must be strictly increasing")
    x = xi.copy() if collocation is None else _check_distinct("collocation points", collocation)
    a = build_influence(xi, x)
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > condition_limit:
        raise PlanningError(
            f"influence array too ill-conditioned (condition ~ {cond:.3e} > {condition_limit:.1e})",
            condition=cond,
        )
    rhs = np.asarray(desired(x), dtype=float)
    if not np.any(rhs):
        alpha = np.zeros_like(rhs)
        rel, steps = 0.0, 0
    else:
        alpha, rel, steps = _solve_refined(a, rhs)
    if rel > RESIDUAL_TARGET:
        raise PlanningError(f"amplitude solve residual {rel:.3e} above {RESIDUAL_TARGET:g}", cond)
    return SteadyPlan(
        actuator_positions=xi,
        collocation_points=x,
        influence=a,
        alpha_bar=alpha,
        y_bar=alpha.copy(),
        residual=float(rel),
        condition=cond,
        refinement_steps=steps,
    )


def steady_shape(plan, x):
    """Superposed steady deflection ``sum_j G(x, xi_j) * alpha_j``."""
    x = np.asarray(x, dtype=float)
    vals = green_eval(x[..., None], plan.actuator_positions) @ plan.alpha_bar
    return float(vals) if np.ndim(vals) == 0 else vals


def steady_slope(plan, x):
    x = np.asarray(x, dtype=float)
    vals = green_dx(x[..., None], plan.actuator_positions) @ plan.alpha_bar
    return float(vals) if np.ndim(vals) == 0 else vals


def interpolation_error(plan, desired, points=L1_GRID_POINTS):
    """L1 distance on ``[0, 1]`` between the desired and the planned shape."""
    x = np.linspace(0.0, 1.0, points)
    return float(simpson_uniform(np.abs(desired(x) - steady_shape(plan, x)), x))


def plan_summary(plan, desired: Optional[DesiredShape] = None):
    """JSON-compatible summary of a solved plan."""
    out = {
        "actuator_count": int(plan.size),
        "residual": plan.residual,
        "condition": plan.condition,
        "max_abs_alpha": float(np.abs(plan.alpha_bar).max()),
    }
    if desired is not None:
        out["l1_error"] = interpolation_error(plan, desired)
    return out


def plan_rows(plan) -> Sequence[tuple]:
    """CSV rows ``(position, alpha_bar, y_bar)``."""
    return list(zip(plan.actuator_positions, plan.alpha_bar, plan.y_bar))
