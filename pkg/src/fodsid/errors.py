"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration/domain problems exit 2,
data problems exit 3, numerical degeneracy under --strict exits 4.
"""


class FodsidError(Exception):
    """Base class for all package errors."""


class DomainError(FodsidError, ValueError):
    """A parameter is outside its mathematical domain (alpha <= 0, p < 1, ...)."""


class ConfigError(FodsidError):
    """Inconsistent or invalid run configuration (unknown keys, missing B, ...)."""


class DataError(FodsidError):
    """Problem with an input data file (missing file, NaN rows, bad columns)."""


class DegenerateError(FodsidError):
    """Numerical degeneracy escalated to fatal under strict mode."""
