"""Quasi-birth-death chains on the swallow tail driven by bivariate orthogonal polynomials."""
from .special import DomainError, ModelParameters, ParameterError, PoleError

__version__ = "0.1.0"

__all__ = ["DomainError", "ModelParameters", "ParameterError", "PoleError", "__version__"]
