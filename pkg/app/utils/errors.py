class LabError(Exception):
    """Base class for every failure raised by the lab."""


class RejectedInputError(LabError, ValueError):
    """An operation was called outside its preconditions."""


class NumericalFailureError(LabError, RuntimeError):
    """Quadrature, root bracketing or a linear solve did not succeed."""


class DomainTruncationError(LabError, ValueError):
    """A field does not decay at the edge of the truncated domain."""


class NoEstimateError(NumericalFailureError):
    """A blow-up time could not be extrapolated from the series."""


class InvariantViolationError(LabError, AssertionError):
    """A structural invariant failed in strict mode."""
