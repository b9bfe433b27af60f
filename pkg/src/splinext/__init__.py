"""Least-squares fitting with B-spline extension frames.

Build a system with :func:`build_system` and solve it with
:func:`solve`; the AZ solvers exploit the low rank of the boundary block.
"""

__version__ = "0.1.0"

from .assembly import DualSpec, ExtensionSystem, build_AmAZtA, build_system, reduce_system
from .duals import compact_dual, continuous_dual_coeffs, discrete_dual_coeffs, truncate_dual
from .errors import (
    EmptyDomain,
    GridMismatch,
    LowOversampling,
    MaxIterationsReached,
    NoCompactDual,
    NormCapUnreachable,
    RasterParseError,
    SingularCirculant,
    SplinextError,
    UnknownDomain,
    UnsupportedZspec,
)
from .geometry import boundary_index_set, build_masked_grid, builtin_domain, parse_domain
from .kernel import PeriodizedBasis, bspline, characteristic_function, sample_spline
from .solvers import FitResult, SolverConfig, solve, solve_iterative, solve_reduced_az, solve_sparse_az, solve_svd

__all__ = [
    "DualSpec", "ExtensionSystem", "build_AmAZtA", "build_system", "reduce_system",
    "compact_dual", "continuous_dual_coeffs", "discrete_dual_coeffs", "truncate_dual",
    "EmptyDomain", "GridMismatch", "LowOversampling", "MaxIterationsReached", "NoCompactDual",
    "NormCapUnreachable", "RasterParseError", "SingularCirculant", "SplinextError",
    "UnknownDomain", "UnsupportedZspec",
    "boundary_index_set", "build_masked_grid", "builtin_domain", "parse_domain",
    "PeriodizedBasis", "bspline", "characteristic_function", "sample_spline",
    "FitResult", "SolverConfig", "solve", "solve_iterative", "solve_reduced_az",
    "solve_sparse_az", "solve_svd",
]
