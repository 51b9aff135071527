"""Exception types shared across the package."""


class Sigma2Error(Exception):
    pass


class InvalidArgument(Sigma2Error, ValueError):
    pass


class SingularInput(Sigma2Error, ArithmeticError):
    """Analytic function evaluated outside its domain at the base point."""

    def __init__(self, tag: str, message: str = ""):
        self.tag = tag
        super().__init__(f"{tag}: {message}" if message else tag)


class ExprError(Sigma2Error, ValueError):
    def __init__(self, message: str, offset: int, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of {sorted(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifier(ExprError):
    pass


class NonIntegerExponent(ExprError):
    pass


class MetricSpecError(Sigma2Error, ValueError):
    pass


class ChartDomainError(Sigma2Error, ValueError):
    """The point violates a chart guard or the metric is not positive definite there."""


class GuardViolation(ChartDomainError):
    pass


class NotPositiveDefinite(ChartDomainError):
    pass


class PreconditionError(Sigma2Error, ValueError):
    def __init__(self, message: str, drift: float):
        self.drift = drift
        super().__init__(f"{message} (measured drift {drift:.3e})")


class ConfigError(Sigma2Error, ValueError):
    pass


class StalledFlow(Sigma2Error, RuntimeError):
    def __init__(self, message: str, state):
        self.state = state
        super().__init__(message)
