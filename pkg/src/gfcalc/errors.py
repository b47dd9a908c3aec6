"""Exception and warning classes shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the admissible range of an operation."""


class PoleError(DomainError):
    """Evaluation at a pole (e.g. the Gamma function at a non-positive integer)."""


class ConvergenceError(ArithmeticError):
    """A series did not meet its truncation test within the allowed terms."""


class CapabilityError(TypeError):
    """The input lacks information the operation needs (e.g. derivatives)."""


class QuadratureError(ArithmeticError):
    """Quadrature produced a non-finite value; carries the offending node."""

    def __init__(self, message, node_index=None, t=None):
        super().__init__(message)
        self.node_index = node_index
        self.t = t


class ParseError(ValueError):
    """A textual descriptor could not be parsed; ``position`` is 0-based."""

    def __init__(self, message, position=0):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class AccuracyWarning(UserWarning):
    """A result was produced by a reduced-accuracy fallback route."""


class TailWarning(UserWarning):
    """A truncated Laplace integral's tail estimate exceeds the tolerance."""
