"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """A checked precondition on the input failed."""


class DegenerateInputError(ValueError):
    """Input is degenerate (e.g. identically zero where growth is measured)."""


class CapabilityError(RuntimeError):
    """Request exceeds what native floating point can deliver."""

    def __init__(self, message, largest_safe=None):
        super().__init__(message)
        self.largest_safe = largest_safe


class ConstructionError(RuntimeError):
    """The extremal construction could not certify its bounds."""


class DivergenceError(RuntimeError):
    """An iteration failed to converge."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
