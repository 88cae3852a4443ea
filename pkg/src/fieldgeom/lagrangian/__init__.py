"""Variational DSL: parse densities, differentiate symbolically, decompose dL = E + d theta."""

from .euler import EulerLagrange, LagrangianSpec, check_covariance, check_decomposition, euler_lagrange, parse
from .models import Model, bf2d, get_model, noncovariant1d, scalar1d
from .parser import parse_expression, pretty

__all__ = [
    "EulerLagrange",
    "LagrangianSpec",
    "Model",
    "bf2d",
    "check_covariance",
    "check_decomposition",
    "euler_lagrange",
    "get_model",
    "noncovariant1d",
    "parse",
    "parse_expression",
    "pretty",
    "scalar1d",
]
