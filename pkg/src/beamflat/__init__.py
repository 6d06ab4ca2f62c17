"""Flatness-based shape control of a beam with in-domain point actuators."""

from .errors import (BeamFlatError, ConfigError, ConvergenceError, DegenerateGeometryError,
                     DivergenceError, DomainError, JetOverflowError, PlanningError)
from .flatseries import FlatTrajectory, input_series, state_series
from .gevrey import GevreyProfile, derivative_table, gevrey_eval
from .green import green_eval, solve_amplitudes, steady_shape
from .modalsim import ClosedLoopConfig, ModeBasis, run_scenario

__version__ = "0.1.0"
