"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument is outside the domain an operation accepts."""


class ContractViolation(ValueError):
    """An input is missing a structural property the caller promised (e.g. Hermiticity)."""


class NotPSDError(ValueError):
    """A matrix expected to be positive semidefinite has a clearly negative eigenvalue."""


class NumericalFailure(RuntimeError):
    """An iterative routine produced non-finite values."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class UndefinedFidelityError(ValueError):
    """Fidelity requested for an element with zero trace."""


class SchemaError(ValueError):
    """A serialized artifact does not follow the expected layout."""
