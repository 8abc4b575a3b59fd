"""Exception types shared across the library.

The CLI maps these onto exit codes: invalid arguments -> 2, numeric
failures -> 3, I/O and file-format problems -> 4.
"""


class InvalidArgumentError(ValueError):
    """A precondition on an argument or configuration was violated."""


class OutOfRangeError(InvalidArgumentError):
    """A query time fell outside the normalized interval [0, 1]."""


class UndefinedMetricError(InvalidArgumentError):
    """A metric is undefined for the given inputs (e.g. zero reference norm)."""


class NumericError(RuntimeError):
    """A computation produced non-finite values or blew up."""


class DivergedError(NumericError):
    """A rollout exceeded the state-norm bound.

    Carries the partial result computed up to the failing step in
    ``partial`` so callers can inspect where the blow-up happened.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TrainingAbortedError(NumericError):
    """Training hit a numeric failure; holds the last good parameters."""

    def __init__(self, message, step, best_params=None, history=None):
        super().__init__(message)
        self.step = step
        self.best_params = best_params
        self.history = history or []


class DataFormatError(RuntimeError):
    """A dataset or checkpoint file is malformed or has the wrong version."""
