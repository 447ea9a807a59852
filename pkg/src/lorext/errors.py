"""Exception hierarchy shared by all lorext modules."""


class LorextError(Exception):
    """Base class for every error raised by lorext."""


class GridMismatchError(LorextError, ValueError):
    """Two objects live on incompatible grids (cell count or interval length)."""


class PreconditionError(LorextError, ValueError):
    """An operation was called outside the hypotheses it is defined under."""


class GeneratorFlagError(PreconditionError):
    """The concave generator lacks a property (strictness, nonlinearity) the call needs."""


class NotNormalizedError(PreconditionError):
    """The center of an extremality probe does not have unit norm."""


class LemmaViolation(LorextError):
    """A numerically checked structural property failed at the requested tolerance.

    Raised loudly instead of returning a doubtful result; the offending data is
    attached so the caller can inspect it.
    """

    def __init__(self, message, data=None):
        super().__init__(message)
        self.data = data
