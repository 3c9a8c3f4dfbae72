"""Exception types shared across the package."""


class QwError(Exception):
    """Base class for all package errors."""


class DomainError(QwError):
    """Input outside the mathematical domain of an operation."""


class ValidationError(QwError):
    """Parameter set violates a model constraint."""


class ConvergenceError(QwError):
    """Adaptive refinement stalled before reaching the requested tolerance."""


class InternalConsistencyError(QwError):
    """An exact identity that must hold failed, which indicates a bug."""


class ImaginaryResidueError(QwError):
    """Imaginary part of a nominally real integral exceeded tolerance."""


class SizeError(QwError):
    """Requested combinatorial object exceeds the configured cap."""


class CutoffError(QwError):
    """Basis cutoff too small: truncation tail above tolerance."""


class EigensolveError(QwError):
    """Symmetric eigensolver failed to converge."""


class FitError(QwError):
    """Not enough data for the requested least-squares fit."""
