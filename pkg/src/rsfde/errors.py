"""Exception types raised by the solver stack."""


class ParameterError(ValueError):
    """A scalar parameter lies outside its admissible domain."""


class SizeError(ValueError):
    """Array or operator dimensions do not agree."""


class SizeCapError(SizeError):
    """A dense materialization was requested above the configured cap."""


class SingularOperatorError(ArithmeticError):
    """A shifted spectrum contains a (numerically) zero entry."""


class NumericBreakdownError(ArithmeticError):
    """An operator produced NaN or Inf during an iterative solve."""


class StepFailure(RuntimeError):
    """An implicit time step failed because its linear solve did not converge.

    The iteration report of the failing solve is kept on ``report``.
    """

    def __init__(self, message, report=None, step=None):
        super().__init__(message)
        self.report = report
        self.step = step
