"""Solvers and sensitivities for parametric (quasi-)generalized equations."""

from .errors import (ConfigError, ContractionViolation, DimensionError, InconsistentSolution,
                     NonConverged, NonConvergedDerivative, SmallnessViolated)
from .hilbert import HilbertSpace
from .operators import AbsPhi, AffineOp, AffinePhi, FunctionOp, PhiOp, ResolventOp, SingleValuedOp
from .resolvents import BoxNormalCone, LinearMonotoneB, ShiftedResolvent, WeightedShrinkage
from .ge import GEProblem, SolveReport, SolverConfig
from .qvi import QVIProblem, SmallnessReport, check_smallness

__all__ = [
    "ConfigError", "ContractionViolation", "DimensionError", "InconsistentSolution", "NonConverged",
    "NonConvergedDerivative", "SmallnessViolated", "HilbertSpace", "AbsPhi", "AffineOp", "AffinePhi",
    "FunctionOp", "PhiOp", "ResolventOp", "SingleValuedOp", "BoxNormalCone", "LinearMonotoneB",
    "ShiftedResolvent", "WeightedShrinkage", "GEProblem", "SolveReport", "SolverConfig", "QVIProblem",
    "SmallnessReport", "check_smallness",
]

__version__ = "0.1.0"
