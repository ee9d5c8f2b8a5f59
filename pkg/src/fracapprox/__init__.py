"""Fractional Laplacians on the unit ball, their Green function and principal
eigenpair, and approximation of arbitrary functions by solutions of mixed
local/nonlocal equations."""

__version__ = "0.1.0"

from .approximator import (
    ApproximationConfig,
    ApproximationResult,
    Polynomial,
    approximate_caloric,
    approximate_function,
    approximate_monomial,
    approximate_polynomial,
    logistic_resource,
    parse_polynomial,
    plan,
)
from .eigen import EigenConfig, EigenPair, principal_eigenpair
from .fields import OperatorSpec, ScalarField, caloric_spec, fractional_spec
from .fracop import frac_laplacian_at, lambda_residual_at
from .green import GreenKernel, green_value
from .poisson import solve
from .quadrature import QuadConfig
from .spanner import assemble_matrix, build_dictionary, span_solve

__all__ = [
    "ApproximationConfig",
    "ApproximationResult",
    "EigenConfig",
    "EigenPair",
    "GreenKernel",
    "OperatorSpec",
    "Polynomial",
    "QuadConfig",
    "ScalarField",
    "approximate_caloric",
    "approximate_function",
    "approximate_monomial",
    "approximate_polynomial",
    "assemble_matrix",
    "build_dictionary",
    "caloric_spec",
    "frac_laplacian_at",
    "fractional_spec",
    "green_value",
    "lambda_residual_at",
    "logistic_resource",
    "parse_polynomial",
    "plan",
    "principal_eigenpair",
    "solve",
    "span_solve",
]
