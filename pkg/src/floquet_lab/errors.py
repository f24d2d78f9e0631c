"""Exception hierarchy shared across the toolkit."""


class FloquetError(Exception):
    """Base class for all toolkit errors."""


class GridError(FloquetError, ValueError):
    pass


class CoefficientError(FloquetError, ValueError):
    pass


class ExprError(FloquetError, ValueError):
    """Raised for malformed or unevaluable coefficient expressions.

    ``offset`` is the byte offset of the failure in the source string, or
    ``None`` for evaluation-time failures.
    """

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class PositivityError(FloquetError):
    pass


class DegenerateEigenvalueError(FloquetError):
    pass


class HypothesisError(FloquetError):
    """The positivity hypothesis on the generalized principal eigenvalue fails."""


class ConvergenceError(FloquetError):
    pass


class MeasureError(FloquetError, ValueError):
    pass


class ConfigError(FloquetError, ValueError):
    pass


class AdjointResolutionWarning(UserWarning):
    pass
