"""Conditional distribution surfaces F(t|z).

Every nuisance in this package is consumed through one small interface: a
conditional CDF that can be evaluated on a matrix of (subject, time) pairs
and, for the fitted (step-function) kinds, exposes its global jump grid so
that martingale integrals reduce to exact finite sums.

Kinds
-----
``cox``
    ``1 - exp(-cumhaz(t) * exp(psi'(z - center)))`` from a proportional
    hazards fit; jumps at the baseline jump times.
``cox_reverse``
    Entry-time CDF recovered from a reversed-clock hazard fit,
    ``exp(-revhaz((tau - q)-) * exp(psi'(z - center)))``; precomputed here as
    a survival-form step function on the original clock.
``stratified_pl``
    Covariate-stratum lookup into per-stratum step CDFs.
``external_table``
    Same lookup structure, loaded from a CSV rather than fitted.
``constant_zero`` / ``constant_one``
    Degenerate surfaces used to collapse the doubly robust estimator into
    its one-model special cases.
``analytic``
    A smooth closed-form law (simulation truths and misspecification
    probes); martingale integrals against it are computed by panelled
    Gauss-Legendre quadrature instead of jump sums.

A clamped view (``clamp_overlap``) bounds a surface away from the degenerate
values 0 or 1 while preserving monotonicity.
"""

import numpy as np

from .errors import BadEps
from .stepfun import StepFunction


def _as_zmat(z, d):
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z.reshape(1, -1) if d else z.reshape(-1, 1)[:, :0]
    return z


class ConditionalCdf:
    """Interface shared by all conditional CDF surfaces."""

    kind = "abstract"

    def grid(self):
        """Global sorted candidate jump times, or ``None`` for smooth kinds."""
        raise NotImplementedError

    def cdf_at(self, times, Z):
        """Matrix of values ``F(times[j] | Z[i])`` with shape (n, m)."""
        raise NotImplementedError

    def before_grid(self, Z):
        """Values just below the first grid point, shape (n,)."""
        raise NotImplementedError

    def cdf_diag(self, t, Z):
        """Diagonal evaluation ``F(t[i] | Z[i])``, shape (n,)."""
        raise NotImplementedError

    def cdf_mat(self, tmat, Z):
        """Row-wise evaluation on a (n, k) matrix of times."""
        raise NotImplementedError

    def cdf(self, t, z):
        """Evaluate at times ``t`` (scalar or 1-d) for one covariate vector."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        Z = np.asarray(z, dtype=float).reshape(1, -1)
        out = self.cdf_at(t, Z)[0]
        return out if out.shape[0] > 1 else float(out[0])

    def jump_times(self, z):
        """Discontinuity points of ``t -> F(t|z)`` (empty for smooth kinds)."""
        g = self.grid()
        if g is None or g.size == 0:
            return np.empty(0)
        Z = np.asarray(z, dtype=float).reshape(1, -1)
        vals = self.cdf_at(g, Z)[0]
        prev = np.concatenate(([float(self.before_grid(Z)[0])], vals[:-1]))
        return g[vals - prev > 0]


class ExpStepCdf(ConditionalCdf):
    """Exponential-of-step surface shared by both hazard-fit kinds.

    ``survival_form=False`` gives ``1 - exp(-lam(t) e^eta)`` (an event-time
    CDF with nondecreasing ``lam``); ``survival_form=True`` gives
    ``exp(-lam(t) e^eta)`` (an entry-time CDF, ``lam`` nonincreasing).
    """

    def __init__(self, times, lam, lam_before, psi, center, survival_form):
        self._times = np.asarray(times, dtype=float)
        self._lam = np.asarray(lam, dtype=float)
        self._lam_before = float(lam_before)
        self.psi = np.asarray(psi, dtype=float)
        self.center = np.asarray(center, dtype=float)
        self.survival_form = bool(survival_form)
        self.kind = "cox_reverse" if survival_form else "cox"

    def _eta(self, Z):
        Z = _as_zmat(Z, self.psi.size)
        return (Z - self.center) @ self.psi

    def _lam_at(self, times):
        idx = np.searchsorted(self._times, times, side="right") - 1
        return np.where(idx < 0, self._lam_before, self._lam[np.maximum(idx, 0)])

    def grid(self):
        return self._times

    def _combine(self, lam, eta):
        core = np.exp(-np.multiply.outer(np.exp(eta), lam)) if lam.ndim == 1 \
            else np.exp(-lam * np.exp(eta)[:, None])
        return core if self.survival_form else 1.0 - core

    def cdf_at(self, times, Z):
        return self._combine(self._lam_at(np.asarray(times, dtype=float)), self._eta(Z))

    def before_grid(self, Z):
        core = np.exp(-self._lam_before * np.exp(self._eta(Z)))
        return core if self.survival_form else 1.0 - core

    def cdf_diag(self, t, Z):
        lam = self._lam_at(np.asarray(t, dtype=float))
        core = np.exp(-lam * np.exp(self._eta(Z)))
        return core if self.survival_form else 1.0 - core

    def cdf_mat(self, tmat, Z):
        lam = self._lam_at(np.asarray(tmat, dtype=float))
        core = np.exp(-lam * np.exp(self._eta(Z))[:, None])
        return core if self.survival_form else 1.0 - core


class StepCdf(ConditionalCdf):
    """Stratum-lookup step CDF: each covariate stratum has its own curve."""

    def __init__(self, curves, assign, kind="stratified_pl"):
        """
        Parameters
        ----------
        curves : sequence of StepFunction
            One CDF per stratum (right-continuous, nondecreasing, in [0,1]).
        assign : callable
            Maps a covariate matrix (n, d) to integer stratum indices (n,).
        """
        self.curves = list(curves)
        self.assign = assign
        self.kind = kind
        self._grid = np.unique(np.concatenate([c.times for c in self.curves]))
        # per-stratum values on the common grid, plus the pre-grid value
        if self._grid.size:
            self._vals = np.stack([c(self._grid) for c in self.curves])
        else:
            self._vals = np.zeros((len(self.curves), 0))
        self._before = np.array([c.value_before_first for c in self.curves])

    def grid(self):
        return self._grid

    def _strata(self, Z):
        return np.asarray(self.assign(_as_zmat(Z, 1)), dtype=int)

    def cdf_at(self, times, Z):
        times = np.asarray(times, dtype=float)
        s = self._strata(Z)
        idx = np.searchsorted(self._grid, times, side="right") - 1
        vals = self._vals[s][:, np.maximum(idx, 0)]
        before = self._before[s][:, None]
        return np.where(idx[None, :] < 0, before, vals)

    def before_grid(self, Z):
        return self._before[self._strata(Z)]

    def cdf_diag(self, t, Z):
        t = np.asarray(t, dtype=float)
        s = self._strata(Z)
        idx = np.searchsorted(self._grid, t, side="right") - 1
        vals = self._vals[s, np.maximum(idx, 0)]
        return np.where(idx < 0, self._before[s], vals)

    def cdf_mat(self, tmat, Z):
        tmat = np.asarray(tmat, dtype=float)
        s = self._strata(Z)
        idx = np.searchsorted(self._grid, tmat, side="right") - 1
        vals = self._vals[s[:, None], np.maximum(idx, 0)]
        return np.where(idx < 0, self._before[s][:, None], vals)


class ConstantCdf(ConditionalCdf):
    """Degenerate surface identically 0 (``constant_zero``) or 1 (``constant_one``)."""

    def __init__(self, value):
        if value not in (0.0, 1.0):
            raise ValueError("degenerate surfaces are 0 or 1")
        self.value = float(value)
        self.kind = "constant_zero" if value == 0.0 else "constant_one"

    def grid(self):
        return np.empty(0)

    def cdf_at(self, times, Z):
        n = _as_zmat(Z, 1).shape[0]
        return np.full((n, np.asarray(times).size), self.value)

    def before_grid(self, Z):
        return np.full(_as_zmat(Z, 1).shape[0], self.value)

    def cdf_diag(self, t, Z):
        return np.full(np.asarray(t).size, self.value)

    def cdf_mat(self, tmat, Z):
        return np.full(np.shape(tmat), self.value)


class AnalyticCdf(ConditionalCdf):
    """Closed-form conditional law with density, for truths and probes.

    ``cdf_fn`` and ``pdf_fn`` take a time array of shape (n,) or (n, k) and a
    covariate matrix of shape (n, d) and broadcast over rows.  ``breakpoints``
    lists global times where the formulas may kink (support edges), so the
    quadrature engine can split panels there.
    """

    kind = "analytic"

    def __init__(self, cdf_fn, pdf_fn=None, breakpoints=(), d=0):
        self.cdf_fn = cdf_fn
        self.pdf_fn = pdf_fn
        self.breakpoints = tuple(float(b) for b in breakpoints)
        self.d = d

    def grid(self):
        return None

    def cdf_at(self, times, Z):
        Z = _as_zmat(Z, self.d)
        times = np.asarray(times, dtype=float)
        t = np.broadcast_to(times[None, :], (Z.shape[0], times.size))
        return np.asarray(self.cdf_fn(t, Z), dtype=float)

    def before_grid(self, Z):
        raise NotImplementedError("analytic surfaces have no jump grid")

    def cdf_diag(self, t, Z):
        Z = _as_zmat(Z, self.d)
        return np.asarray(self.cdf_fn(np.asarray(t, dtype=float), Z), dtype=float)

    def cdf_mat(self, tmat, Z):
        Z = _as_zmat(Z, self.d)
        return np.asarray(self.cdf_fn(np.asarray(tmat, dtype=float), Z), dtype=float)

    def pdf_at(self, t, Z):
        if self.pdf_fn is None:
            raise ValueError("this analytic surface has no density attached")
        return np.asarray(self.pdf_fn(np.asarray(t, dtype=float), _as_zmat(Z, self.d)),
                          dtype=float)


class ClampedCdf(ConditionalCdf):
    """View of a surface bounded below (``G_floor``) or above (``F_ceiling``)."""

    def __init__(self, base, eps, role):
        if not (0.0 <= eps < 0.5):
            raise BadEps(f"clamp eps must be in [0, 0.5), got {eps}")
        if role not in ("G_floor", "F_ceiling"):
            raise ValueError("role must be 'G_floor' or 'F_ceiling'")
        self.base = base
        self.eps = float(eps)
        self.role = role
        self.kind = base.kind

    def _apply(self, v):
        if self.role == "G_floor":
            return np.maximum(v, self.eps)
        return np.minimum(v, 1.0 - self.eps)

    def grid(self):
        return self.base.grid()

    def cdf_at(self, times, Z):
        return self._apply(self.base.cdf_at(times, Z))

    def before_grid(self, Z):
        return self._apply(self.base.before_grid(Z))

    def cdf_diag(self, t, Z):
        return self._apply(self.base.cdf_diag(t, Z))

    def cdf_mat(self, tmat, Z):
        return self._apply(self.base.cdf_mat(tmat, Z))

    @property
    def breakpoints(self):
        return getattr(self.base, "breakpoints", ())


def clamp_overlap(c, eps, role):
    """Bound a conditional CDF away from 0 (role ``G_floor``) or 1
    (role ``F_ceiling``) by ``eps``; ``eps=0`` returns the surface unchanged."""
    if not (0.0 <= eps < 0.5):
        raise BadEps(f"clamp eps must be in [0, 0.5), got {eps}")
    if eps == 0.0:
        return c
    return ClampedCdf(c, eps, role)


def degenerate(which):
    """Degenerate nuisance: ``"F_zero"`` (event CDF identically 0) or
    ``"G_one"`` (entry CDF identically 1)."""
    if which == "F_zero":
        return ConstantCdf(0.0)
    if which == "G_one":
        return ConstantCdf(1.0)
    raise ValueError("which must be 'F_zero' or 'G_one'")


def survival_curve_to_entry_cdf(curve, tau):
    """Convert a reversed-clock survival step curve into an entry-time CDF.

    If ``S`` is the fitted survival function of ``tau - Q``, the CDF of ``Q``
    is its left limit at the reflected time, ``G(q) = S((tau - q)-)``, which
    is again a right-continuous step function on the original clock.
    """
    t, v = curve.times, curve.values
    if t.size == 0:
        return StepFunction(np.empty(0), np.empty(0), 1.0)
    times_q = (tau - t)[::-1]
    values_q = np.concatenate((v[::-1][1:], [curve.value_before_first]))
    return StepFunction(times_q, values_q, float(v[-1]))
