"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes; library callers can catch
QflipError to handle anything raised by this package.
"""


class QflipError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(QflipError):
    """Invalid user-supplied arguments, files, or configuration."""


class CoverageError(QflipError):
    """A dataset or model is missing entries required by the requested
    operation (depths, input states, or fit points)."""


class NumericError(QflipError):
    """A numerical step failed or produced an unusable result."""
