"""Exception types shared across the package."""


class AssumptionViolation(ValueError):
    """A criterion produced a value outside [0, 1]."""


class DomainViolation(ValueError):
    """A raw criterion left the interval declared for scaling."""


class NumericError(ArithmeticError):
    """A criterion produced a non-finite value."""


class PremiseError(ValueError):
    """Inputs fall outside the premises a bound was derived under."""


class ConfigError(ValueError):
    """Bad experiment configuration (unknown problem, invalid value)."""
