"""Exception hierarchy.

Two families matter to callers: ``InputError`` (bad or missing data, exit
code 2 from the command line) and ``EstimationError`` (the data were fine
but an estimator could not be computed, exit code 3).
"""


class DoubleTruncationError(Exception):
    """Base class for every error raised by this package."""


class InputError(DoubleTruncationError, ValueError):
    pass


class EstimationError(DoubleTruncationError):
    pass


class AllRowsInvalid(InputError):
    pass


class TruncationViolation(InputError):
    """A complete row with ``u > x`` or ``x > v``, or a non-finite value."""

    def __init__(self, row, message):
        super().__init__(f"row {row}: {message}")
        self.row = row


class EmptyInput(InputError):
    pass


class NegativeWeight(InputError):
    pass


class DomainError(InputError):
    pass


class UnsupportedLaw(InputError):
    pass


class NotConverged(EstimationError):
    pass


class OriginalFitFailed(EstimationError):
    pass


class AllReplicatesFailed(EstimationError):
    pass


class AllTrialsDiscarded(EstimationError):
    pass
