"""Exception types shared across the package."""


class CarlesonError(Exception):
    """Base class for all package errors."""


class StructuralError(CarlesonError, ValueError):
    """Payload shapes or space tags do not match."""


class AlignmentError(CarlesonError, ValueError):
    """An interval or point is not aligned with the sampling grid."""


class CapacityError(CarlesonError):
    """A requested generation, size floor or pair count exceeds the configured range."""


class ContractError(CarlesonError):
    """A documented precondition or structural guarantee does not hold."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ResolutionError(CarlesonError):
    """A frequency or truncation level is under-resolved for the current grid."""
