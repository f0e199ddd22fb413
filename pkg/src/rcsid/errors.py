"""Exception hierarchy. The CLI maps these onto exit codes."""


class RcsError(Exception):
    pass


class ValidationError(RcsError, ValueError):
    """Input data or configuration violates a documented invariant."""


class ParseError(ValidationError):
    pass


class EmptySegmentError(ValidationError):
    pass


class InvalidModelError(ValidationError):
    pass


class NumericError(RcsError, ArithmeticError):
    """A computation produced non-finite or otherwise unusable numbers."""


class DegenerateDataError(NumericError):
    pass


class EstimationError(NumericError):
    """An iterative estimator failed. ``last`` holds the final iterate, if any."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class ComponentCollapseError(EstimationError):
    pass


class IndeterminateClassificationError(NumericError):
    pass
