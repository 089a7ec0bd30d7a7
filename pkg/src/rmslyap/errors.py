"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data violates a declared invariant."""


class NotErgodicError(ValidationError):
    pass


class GatingError(ValidationError):
    """An operation was asked to run outside the class of systems it supports."""


class ConvergenceError(RuntimeError):
    pass


class InvariantViolation(AssertionError):
    """An exact inequality that must hold on every path failed numerically."""
