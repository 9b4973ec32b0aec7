"""Design and verification tools for GHZ-entangled networks of neutral-atom clocks."""

from .errors import ErrorBudget, ErrorInputs, total_error_per_atom
from .geometry import GeometryIntegrals, LatticeGeometry, integral_I, integral_J
from .metrology import GhzMeasurementModel, average_fisher, gain
from .optimize import NetworkPlan, OptimizationResult, maximize_gain, minimize_E, scan_ntilde
from .params import LowerLevelRates, RydbergConfig

__version__ = "0.1.0"

__all__ = [
    "ErrorBudget",
    "ErrorInputs",
    "GeometryIntegrals",
    "GhzMeasurementModel",
    "LatticeGeometry",
    "LowerLevelRates",
    "NetworkPlan",
    "OptimizationResult",
    "RydbergConfig",
    "average_fisher",
    "gain",
    "integral_I",
    "integral_J",
    "maximize_gain",
    "minimize_E",
    "scan_ntilde",
    "total_error_per_atom",
]
