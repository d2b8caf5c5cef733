"""Transformations nu(T) whose full-data mean is the estimand.

Two built-ins cover the usual targets: the survival indicator
``nu(t) = 1(t > t0)`` (estimand: survival probability past ``t0``) and the
restricted mean ``nu(t) = min(t, t0)``.  A tabulated piecewise-constant
transformation covers user-supplied cases.
"""

from dataclasses import dataclass, field

import numpy as np

from .stepfun import StepFunction


@dataclass(frozen=True)
class Functional:
    """A bounded transformation of the event time.

    Attributes
    ----------
    kind : str
        ``"survival_indicator"``, ``"rmst"`` or ``"tabulated"``.
    t0 : float or None
        Horizon for the built-in kinds.
    table : StepFunction or None
        The transformation itself for the tabulated kind.
    """

    kind: str
    t0: float | None = None
    table: StepFunction | None = field(default=None, compare=False)

    def nu(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "survival_indicator":
            return (t > self.t0).astype(float)
        if self.kind == "rmst":
            return np.minimum(t, self.t0)
        return self.table(t)

    def label(self):
        if self.kind == "tabulated":
            return "tabulated"
        return f"{self.kind}(t0={self.t0:g})"


def survival_indicator(t0):
    """Estimand ``pr*(T > t0)``."""
    return Functional("survival_indicator", t0=float(t0))


def rmst(t0):
    """Estimand ``E*{min(T, t0)}``, the restricted mean survival time."""
    return Functional("rmst", t0=float(t0))


def tabulated(times, values, value_before_first=0.0):
    """Piecewise-constant user transformation given as a step table."""
    return Functional("tabulated", table=StepFunction(times, values, value_before_first))
