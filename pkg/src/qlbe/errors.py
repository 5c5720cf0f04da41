"""Exception types shared across the package."""


class QlbeError(Exception):
    """Base class for all package errors."""


class DomainError(QlbeError, ValueError):
    """An argument is outside the physical domain of an operation."""


class ContractViolationError(QlbeError, ValueError):
    """Incompatible inputs (dimension or grid mismatch) passed to an operation."""


class ConfigurationError(QlbeError, ValueError):
    """Invalid configuration (bad key, bad value, or violated setup precondition)."""


class UnsupportedMixtureError(QlbeError, ValueError):
    """Gas mixture with unequal molecular masses across components."""


class AccuracyError(QlbeError, RuntimeError):
    """A quadrature failed its convergence or resolution check."""


class RunInvalidatedError(QlbeError, RuntimeError):
    """An evolution run violated a physical monitor.

    Carries the simulation time at which the monitor tripped.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time
