"""Exception types shared across the package."""


class LureError(Exception):
    """Base class for all package errors."""


class DimensionError(LureError, ValueError):
    pass


class SymmetryError(LureError, ValueError):
    pass


class SingularMatrixError(LureError, ArithmeticError):
    pass


class ParameterError(LureError, ValueError):
    pass


class SizeError(LureError, ValueError):
    """Raised when a box has too many coordinates for exact enumeration."""


class HypothesisError(LureError):
    """A structural precondition (diagonal stability, network structure, ...) does not hold."""


class NonlinearityError(LureError):
    pass


class StiffnessError(LureError, ArithmeticError):
    """Integration made no progress or left the finite range.

    ``state`` and ``time`` carry the last accepted point for diagnostics.
    """

    def __init__(self, message, time=None, state=None):
        super().__init__(message)
        self.time = time
        self.state = state


class ConfigError(LureError, ValueError):
    """Invalid configuration document; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
