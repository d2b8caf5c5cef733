"""Right-continuous step functions.

Every estimated curve in this package (cumulative hazards, survival curves,
conditional CDFs at a fixed covariate value) is a piecewise-constant,
right-continuous function of time.  :class:`StepFunction` stores the jump
locations and post-jump values and evaluates by binary search.
"""

import numpy as np


class StepFunction:
    """A right-continuous piecewise-constant function.

    Parameters
    ----------
    times : array_like
        Strictly increasing jump locations.
    values : array_like
        Function value on ``[times[i], times[i+1])``; same length as `times`.
    value_before_first : float
        Value on ``(-inf, times[0])``.
    """

    __slots__ = ("times", "values", "value_before_first")

    def __init__(self, times, values, value_before_first):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if times.shape != values.shape:
            raise ValueError("times and values must have the same length")
        if times.size and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        times.flags.writeable = False
        values.flags.writeable = False
        self.times = times
        self.values = values
        self.value_before_first = float(value_before_first)

    def __call__(self, t):
        """Evaluate at ``t`` (scalar or array), right-continuously."""
        t = np.asarray(t, dtype=float)
        if self.times.size == 0:
            out = np.full(t.shape, self.value_before_first)
            return out if out.ndim else float(self.value_before_first)
        idx = np.searchsorted(self.times, t, side="right") - 1
        out = np.where(idx < 0, self.value_before_first, self.values[np.maximum(idx, 0)])
        return out if out.ndim else float(out)

    def left_limit(self, t):
        """Evaluate the left limit at ``t``: the value just before any jump at ``t``."""
        t = np.asarray(t, dtype=float)
        if self.times.size == 0:
            out = np.full(t.shape, self.value_before_first)
            return out if out.ndim else float(self.value_before_first)
        idx = np.searchsorted(self.times, t, side="left") - 1
        out = np.where(idx < 0, self.value_before_first, self.values[np.maximum(idx, 0)])
        return out if out.ndim else float(out)

    def jumps(self):
        """Jump sizes at each time: value minus the value just before."""
        prev = np.concatenate(([self.value_before_first], self.values[:-1]))
        return self.values - prev

    @property
    def n_jumps(self):
        return self.times.size

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (
            self.value_before_first == other.value_before_first
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return (
            f"StepFunction(n_jumps={self.n_jumps}, "
            f"start={self.value_before_first}, "
            f"end={self.values[-1] if self.n_jumps else self.value_before_first})"
        )


def constant(value):
    """A step function identically equal to ``value``."""
    return StepFunction(np.empty(0), np.empty(0), value)
