"""Evolution engine and verification suite for a rescaled constant-mean-
curvature, spatially-harmonic-gauged Einstein flow with one-form and
internal-metric matter on periodic grids."""

from .chart import (GridChart, HarmonicBasis, build_flat_torus_chart, build_milne_chart,
                    harmonic_oneform_basis, load_supplied_chart, save_chart)
from .errors import (ConfigurationError, DataError, InvariantError, KKFlowError,
                     NumericError, UsageError)
from .linalg import EllipticSolveReport, SolverLog, cg_solve

__all__ = [
    "GridChart", "HarmonicBasis", "build_flat_torus_chart", "build_milne_chart",
    "harmonic_oneform_basis", "load_supplied_chart", "save_chart",
    "ConfigurationError", "DataError", "InvariantError", "KKFlowError",
    "NumericError", "UsageError",
    "EllipticSolveReport", "SolverLog", "cg_solve",
]

__version__ = "0.1.0"
