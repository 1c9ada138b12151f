"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration and parameter problems
exit with 2, numerical failures (domain, solver, fit) with 3.
"""


class SecqosError(Exception):
    """Base class for all package errors."""


class ParameterError(SecqosError, ValueError):
    """A model or scenario parameter is out of its valid range."""


class ConfigError(SecqosError, ValueError):
    """Invalid configuration (bad field value, inconsistent method/scenario)."""


class DomainError(SecqosError, ArithmeticError):
    """A formula was evaluated outside its numerical domain (overflow, 0/0)."""


class SolverError(SecqosError, RuntimeError):
    """Root bracketing or iteration failed; carries bracket diagnostics."""


class FitError(SecqosError, RuntimeError):
    """A least-squares fit was too noisy, degenerate, or under-determined."""


class UnsupportedFamilyError(SecqosError, TypeError):
    """The requested operation is not defined for this source family."""
