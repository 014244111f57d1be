"""Exception types shared across the toolkit.

The CLI maps each class onto a process exit code.
"""


class VruLabelError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 4


class InputError(VruLabelError, ValueError):
    """Malformed input value, file, or configuration."""

    exit_code = 2


class OutOfRangeError(InputError):
    """A query time lies outside the span covered by a track."""


class TimeAlignmentError(VruLabelError):
    """Input streams do not share a common time span.

    ``report`` carries the run report accumulated before the failure, when
    there is one.
    """

    exit_code = 3

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InvariantError(VruLabelError, AssertionError):
    """An internal consistency check failed."""

    exit_code = 4
