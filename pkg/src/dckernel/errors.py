"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A run configuration or an input file failed validation."""


class ConditioningError(RuntimeError):
    """A linear-algebra step lost too much accuracy to continue."""


class QuadratureError(RuntimeError):
    """A quadrature did not settle to the requested tolerance.

    ``estimates`` holds the last two partial results so callers can see how
    far apart successive refinements were.
    """

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class DivergenceError(QuadratureError):
    """Tail contributions of a semi-infinite integral keep growing."""
