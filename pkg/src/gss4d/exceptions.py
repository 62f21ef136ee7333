"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateError(ValueError):
    """The input carries no usable power or energy."""


class ShellAssignmentError(ValueError):
    """A shell assignment does not put the same number of points on each shell."""


class ConstellationFormatError(ValueError):
    """A constellation file could not be parsed.

    The offending line number (1-based) is stored in ``lineno`` when known.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    """Inconsistent or unusable configuration."""


class EstimationError(ValueError):
    """Not enough data to form a reliable estimate."""
