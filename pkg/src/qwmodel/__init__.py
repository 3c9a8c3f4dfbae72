"""Exact spectral theory, matrix elements, series machinery, perturbation
structure, and trajectory experiments for the rational q-w heavy/light
particle model on the half-line."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    CutoffError,
    DomainError,
    EigensolveError,
    FitError,
    ImaginaryResidueError,
    InternalConsistencyError,
    QwError,
    SizeError,
    ValidationError,
)
from .model_core import ModelParams, PhysicalConstants, make_params, physical_energy
from .numerics import ExactScalar, ExactValue, GammaValue, gamma_exact

__all__ = [
    "ConvergenceError",
    "CutoffError",
    "DomainError",
    "EigensolveError",
    "ExactScalar",
    "ExactValue",
    "FitError",
    "GammaValue",
    "ImaginaryResidueError",
    "InternalConsistencyError",
    "ModelParams",
    "PhysicalConstants",
    "QwError",
    "SizeError",
    "ValidationError",
    "gamma_exact",
    "make_params",
    "physical_energy",
    "__version__",
]
