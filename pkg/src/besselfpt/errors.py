"""Exception hierarchy shared by all modules."""


class BesselFPTError(Exception):
    """Base class for library errors."""


class DomainError(BesselFPTError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ArgumentError(BesselFPTError, ValueError):
    """Malformed or inconsistent arguments."""


class ValidationError(BesselFPTError, ValueError):
    """A boundary failed the convexity/integrability checks."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(BesselFPTError, ValueError):
    """Bad run configuration or unusable numerical grid."""


class NumericalError(BesselFPTError, ArithmeticError):
    """A numerical procedure failed to converge or produced non-finite output."""
