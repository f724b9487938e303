"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    pass


class SingularKernelError(ValueError):
    """Raised when the inverse-power kernel is evaluated at coincident points."""


class InsufficientPointsError(ValueError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


class DegenerateDensityError(ValueError):
    pass


class DegeneratePoolError(RuntimeError):
    pass


class ContractViolation(ValueError):
    pass


class InvalidDataError(ValueError):
    """Malformed input data. ``row`` is the 1-based data row, when known."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class FilterDegeneracyError(RuntimeError):
    def __init__(self, t):
        super().__init__(f"all particle weights are zero at t={t}")
        self.t = t


class InternalConsistencyError(RuntimeError):
    pass


class UndefinedAcfError(ValueError):
    pass


class ConfigError(InvalidInputError):
    """Invalid or inconsistent experiment configuration."""
