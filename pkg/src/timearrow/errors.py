"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateSupportError(ValidationError):
    """A probability that must be strictly positive is zero or negative.

    Raised instead of returning an infinite log-ratio; callers that want a
    clamped statistic must do the clamping explicitly.
    """


class GridMismatchError(ValidationError):
    """Path, protocol, and parameters do not share the same time grid."""


class EnumerationLimitError(ValidationError):
    """A requested combinatorial enumeration exceeds the feasibility cap."""


class ConfigError(ValueError):
    """An experiment configuration failed to parse or validate."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
