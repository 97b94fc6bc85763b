"""Exception types shared across the package."""


class MLHJBError(Exception):
    """Base class for all package errors."""


class DomainError(MLHJBError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(MLHJBError, ValueError):
    """A configuration object violates one of its invariants."""


class ConvergenceError(MLHJBError, ArithmeticError):
    """An iterative computation failed to converge within its budget."""


class DivergenceError(MLHJBError, ArithmeticError):
    """A solver state grew beyond the admissible magnitude."""


class InsufficientHistoryError(MLHJBError, ValueError):
    """A history-based operator was asked for more past samples than exist."""


class StateEscapeError(MLHJBError, RuntimeError):
    """A simulated trajectory left the inflated state box."""
