"""Exception hierarchy for truncdr.

All library errors derive from :class:`TruncdrError` so callers can catch a
single base class.  Input problems (bad CSV cells, invariant violations) and
estimation problems (positivity failures, singular fits) are kept distinct
because the CLI maps them to different exit codes.
"""


class TruncdrError(Exception):
    """Base class for all truncdr errors."""


# ---------------------------------------------------------------------------
# data / input errors


class InputError(TruncdrError):
    """Base class for malformed input data."""


class MissingColumn(InputError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"required column {column!r} not found")


class NonNumericCell(InputError):
    def __init__(self, row, col, raw):
        self.row, self.col, self.raw = row, col, raw
        super().__init__(f"cell ({row}, {col!r}) is not a finite number: {raw!r}")


class InvariantViolation(InputError):
    def __init__(self, row, reason):
        self.row, self.reason = row, reason
        super().__init__(f"row {row}: {reason}")


class WrongCensoringTag(InputError):
    pass


class TauTooSmall(InputError):
    def __init__(self, tau, max_x):
        self.tau, self.max_x = tau, max_x
        super().__init__(f"tau={tau} must exceed the largest observed time {max_x}")


class BadK(InputError):
    pass


class BadEps(InputError):
    pass


class UnknownScenario(InputError):
    def __init__(self, scenario):
        self.scenario = scenario
        super().__init__(f"unknown scenario id {scenario!r}")


# ---------------------------------------------------------------------------
# estimation errors


class EstimationError(TruncdrError):
    """Base class for failures during fitting or estimation."""


class NoEvents(EstimationError):
    pass


class SingularHessian(EstimationError):
    """Raised when the partial-likelihood information matrix is singular
    (e.g. collinear or constant covariates)."""


class StratumTooSmall(EstimationError):
    def __init__(self, stratum, n_events, min_events):
        self.stratum, self.n_events, self.min_events = stratum, n_events, min_events
        super().__init__(
            f"stratum {stratum} has {n_events} events, fewer than the "
            f"required {min_events}"
        )


class OverlapViolation(EstimationError):
    """A weighting denominator fell below the tolerated floor."""

    def __init__(self, at, value, what="denominator"):
        self.at, self.value, self.what = at, value, what
        super().__init__(f"{what} underflow at t={at}: value {value}")


class CensoringPositivityViolation(EstimationError):
    pass


class DegenerateDenominator(EstimationError):
    pass


class NoComparablePairs(EstimationError):
    pass


class TooManyFailures(EstimationError):
    def __init__(self, n_failed, n_total):
        self.n_failed, self.n_total = n_failed, n_total
        super().__init__(
            f"{n_failed} of {n_total} bootstrap replicates failed (more than 20%)"
        )
