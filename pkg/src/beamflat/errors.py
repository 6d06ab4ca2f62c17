"""Exception types raised across the package."""


class BeamFlatError(Exception):
    """Base class for all package errors."""


class DomainError(BeamFlatError, ValueError):
    """An argument lies outside the domain where a function is defined."""


class DegenerateGeometryError(BeamFlatError, ValueError):
    """Actuator or collocation nodes coincide, so the influence map is singular."""


class PlanningError(BeamFlatError):
    """The steady-state amplitude solve failed or is too ill-conditioned."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class JetOverflowError(BeamFlatError, OverflowError):
    """Derivative jet produced non-finite values at some order."""

    def __init__(self, order):
        super().__init__(f"derivative jet overflowed at order {order}")
        self.order = order


class ConvergenceError(BeamFlatError):
    """A series or profile violates its convergence requirement."""


class DivergenceError(BeamFlatError):
    """Closed-loop simulation state became non-finite."""

    def __init__(self, t, mode):
        super().__init__(f"simulation diverged at t={t:.6g} (mode index {mode})")
        self.t = t
        self.mode = mode


class ConfigError(BeamFlatError, ValueError):
    """Scenario configuration violates one or more constraints."""

    def __init__(self, problems):
        problems = list(problems)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(problems))
        self.problems = problems
