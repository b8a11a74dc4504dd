"""Exception classes raised across the package."""


class GMTorusError(Exception):
    """Base class for all package errors."""


class DomainError(GMTorusError, ValueError):
    """A pointwise operation hit a non-positive argument or denominator."""


class SpecError(GMTorusError, ValueError):
    """A potential specification is invalid for the target grid."""


class ConfigError(GMTorusError, ValueError):
    """A run configuration could not be parsed."""


class SolverError(GMTorusError, RuntimeError):
    """Base class for eigensolver failures."""


class BudgetError(SolverError):
    """The grid is too large for the dense operator budget."""


class ConvergenceError(SolverError):
    """An iterative method exceeded its iteration limit."""


class PositivityError(SolverError):
    """The principal eigenvector is not entrywise positive."""


class NonrealError(SolverError):
    """The principal eigenvalue has a non-negligible imaginary part."""


class DimError(GMTorusError, ValueError):
    """An operation was called on a grid of unsupported dimension."""


class RangeError(GMTorusError, ValueError):
    """A target value is outside the attainable range."""
