"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a precondition or a type invariant."""


class EllipticityError(ValidationError):
    """Coefficient matrix fails uniform ellipticity on the sample set."""


class OrderingError(RuntimeError):
    """A comparison operator fails its form ordering on a validation field.

    ``field`` holds the offending nodal vector.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
