"""Exception hierarchy shared by every sisnet module."""


class SisError(Exception):
    """Base class for all toolkit errors."""


class TopologyError(SisError, ValueError):
    """A graph constructor received an impossible topology request."""


class ParameterError(SisError, ValueError):
    pass


class ShapeError(SisError, ValueError):
    pass


class FormatError(SisError, ValueError):
    """Malformed edge-list or CSV input."""


class NumericalError(SisError, ArithmeticError):
    """Non-finite values or a failed numerical contract."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InstabilityError(NumericalError):
    """The deterministic integrator left the unit cube; use a smaller dt."""


class IntegrationError(NumericalError):
    """Probability mass drifted away from one in the forward equations."""


class UndefinedThresholdError(SisError, ValueError):
    """The spectral radius is zero, so 1/lambda_1 does not exist."""


class SizeError(SisError, ValueError):
    pass


class ConfigError(SisError):
    pass


class ConfigParseError(ConfigError):
    """Schema-level problem: missing field, wrong type, bad JSON."""


class ConfigValidationError(ConfigError):
    """Well-formed config whose values violate a model precondition."""
