"""Nuisance assembly: entry-time models on the reversed clock, clamping,
overlap diagnostics, and externally supplied tables.

The entry-time distribution G is never fit directly.  The data are reflected
at a horizon ``tau`` past every observed time, a survival learner adjusted
for (reversed) left truncation is fit there, and the fitted reversed survival
curve is read back through its left limit:

    G(q|z) = S_rev((tau - q)- | z).

Because all fitted curves here are step functions, that left-limit map is
carried out exactly on jump structures, never by epsilon perturbation.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .condcdf import (
    ConditionalCdf,
    ExpStepCdf,
    StepCdf,
    clamp_overlap,
    degenerate,
    survival_curve_to_entry_cdf,
)
from .coxlt import fit_cox_lt
from .data import default_tau, reverse_time
from .errors import MissingColumn, NonNumericCell
from .nonparam import StrataRule, _merge_sparse, product_limit_lt, quantile_cuts
from .stepfun import StepFunction

__all__ = [
    "NuisanceSet",
    "fit_G_reverse",
    "clamp_overlap",
    "degenerate",
    "empirical_overlap_report",
    "load_external_cdf",
    "OverlapReport",
]


def fit_G_reverse(ds, learner="cox", tau=None, weights=None, bins=3, cuts=None,
                  min_events=5, tol=1e-9, max_iter=100):
    """Fit the conditional entry-time CDF on the reversed clock.

    Parameters
    ----------
    ds : Dataset
        Rows to learn from.  Under censoring tag ``c2`` the caller passes the
        uncensored subset, weighted by the inverse residual-censoring
        survival; under ``c1`` all rows are used as-is.
    learner : {"cox", "stratified_pl"}
    tau : float, optional
        Reversal horizon; defaults to one unit past the largest observed
        time.
    weights : array_like, optional
        Case weights overriding the dataset's.

    Returns
    -------
    ConditionalCdf
        Nondecreasing in the entry time, with attributes ``tau`` and (for
        the hazard-model learner) ``source_fit``.
    """
    base = ds if weights is None else ds.with_weights(weights)
    if base.censoring == "c2":
        base = base.uncensored() if np.any(base.delta == 0) else base
        base = base.__class__.from_arrays(
            base.q, base.x, np.ones(base.n), base.z, base.weight, "none", base.label
        )
    elif base.censoring == "c1":
        # the possibly-censored time plays the event role on the reversed clock
        base = base.__class__.from_arrays(
            base.q, base.x, np.ones(base.n), base.z, base.weight, "none", base.label
        )
    tau = default_tau(base) if tau is None else float(tau)
    rev = reverse_time(base, tau)

    if learner == "cox":
        fit = fit_cox_lt(rev, tol=tol, max_iter=max_iter)
        lam = fit.baseline_cumhaz
        times_q = (tau - lam.times)[::-1]
        lam_q = np.concatenate((lam.values[::-1][1:], [0.0]))
        cdf = ExpStepCdf(times_q, lam_q, float(lam.values[-1]),
                         fit.psi, fit.center, survival_form=True)
        cdf.source_fit = fit
    elif learner == "stratified_pl":
        event_mask = np.asarray(rev.delta) == 1
        rule = StrataRule(cuts if cuts is not None
                          else quantile_cuts(rev.z, bins) if rev.d else [])
        raw = rule.raw_index(rev.z)
        if cuts is None:
            rule = _merge_sparse(rule, raw, event_mask, rev.weight, min_events)
        labels = rule(rev.z)
        curves = []
        for g in range(rule.n_strata):
            rows = labels == g
            s = product_limit_lt(rev.q[rows], rev.x[rows], rev.delta[rows],
                                 rev.weight[rows]).curve
            curves.append(survival_curve_to_entry_cdf(s, tau))
        cdf = StepCdf(curves, rule, kind="stratified_pl")
    else:
        raise ValueError(f"unknown entry-time learner {learner!r}")
    cdf.tau = tau
    return cdf


@dataclass(frozen=True)
class NuisanceSet:
    """The clamped nuisance bundle consumed by every estimator.

    ``F_hat`` is the conditional CDF of the (possibly censored) event time,
    ``G_hat`` the conditional CDF of the entry time; the optional marginal
    censoring survivals serve the two censoring regimes.  Clamping bounds
    ``G_hat`` below and ``1 - F_hat`` below by the stored epsilons, which
    guarantees every weighting denominator downstream stays away from zero.
    """

    F_hat: ConditionalCdf
    G_hat: ConditionalCdf
    Sc_hat: StepFunction | None = None
    SD_hat: StepFunction | None = None
    clamp_eps_f: float = 0.0
    clamp_eps_g: float = 0.0
    tau1: float | None = None
    tau2: float | None = None

    @classmethod
    def build(cls, F_hat, G_hat, Sc_hat=None, SD_hat=None,
              clamp_eps_f=0.0, clamp_eps_g=0.0, tau1=None, tau2=None):
        """Clamp raw surfaces and bundle them."""
        return cls(
            F_hat=clamp_overlap(F_hat, clamp_eps_f, "F_ceiling"),
            G_hat=clamp_overlap(G_hat, clamp_eps_g, "G_floor"),
            Sc_hat=Sc_hat, SD_hat=SD_hat,
            clamp_eps_f=clamp_eps_f, clamp_eps_g=clamp_eps_g,
            tau1=tau1, tau2=tau2,
        )

    @property
    def eps_guard(self):
        return max(self.clamp_eps_f, self.clamp_eps_g) / 2.0


@dataclass(frozen=True)
class OverlapReport:
    """Per-subject empirical overlap quantities among uncensored subjects:

    eta1
        larger of ``1 - F(tau2|Z)`` and ``1 - F(X|Z)``
    eta2
        larger of ``G(tau1|Z)`` and ``G(Q|Z)``
    eta3
        censoring survival at the subject's own (residual) time, 1 if
        uncensored data
    """

    eta1: np.ndarray
    eta2: np.ndarray
    eta3: np.ndarray
    tau1: float
    tau2: float

    @property
    def minima(self):
        return {
            "eta1": float(self.eta1.min()),
            "eta2": float(self.eta2.min()),
            "eta3": float(self.eta3.min()),
        }


def default_overlap_window(ds):
    """Window endpoints: smallest event time and largest entry time.

    Under tag ``c2`` both are taken among events only, mirroring the jump
    supports of the fitted nuisances.
    """
    if ds.censoring == "c2":
        ev = np.asarray(ds.delta) == 1
        return float(ds.x[ev].min()), float(ds.q[ev].max())
    return float(ds.x.min()), float(ds.q.max())


def empirical_overlap_report(ns, ds):
    """Evaluate the empirical overlap quantities for a fitted nuisance set."""
    tau1, tau2 = ns.tau1, ns.tau2
    if tau1 is None or tau2 is None:
        d1, d2 = default_overlap_window(ds)
        tau1 = d1 if tau1 is None else tau1
        tau2 = d2 if tau2 is None else tau2
    ev = np.asarray(ds.delta) == 1
    q, x, z = ds.q[ev], ds.x[ev], ds.z[ev]
    F_tau2 = ns.F_hat.cdf_diag(np.full(q.shape, tau2), z)
    F_x = ns.F_hat.cdf_diag(x, z)
    eta1 = np.maximum(1.0 - F_tau2, 1.0 - F_x)
    G_tau1 = ns.G_hat.cdf_diag(np.full(q.shape, tau1), z)
    G_q = ns.G_hat.cdf_diag(q, z)
    eta2 = np.maximum(G_tau1, G_q)
    if ds.censoring == "c1" and ns.Sc_hat is not None:
        eta3 = np.asarray(ns.Sc_hat(x))
    elif ds.censoring == "c2" and ns.SD_hat is not None:
        eta3 = np.asarray(ns.SD_hat(x - q))
    else:
        eta3 = np.ones_like(x)
    return OverlapReport(eta1=eta1, eta2=eta2, eta3=eta3, tau1=tau1, tau2=tau2)


def load_external_cdf(source, cuts=None):
    """Load an externally fitted conditional CDF from CSV.

    The file has columns ``stratum,time,value``: one right-continuous,
    nondecreasing step CDF per integer stratum id.  ``cuts`` (list of cut
    point arrays, one per covariate) defines how covariate vectors map to
    stratum ids; with a single stratum no cuts are needed.
    """
    if isinstance(source, bytes):
        text = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str) and "\n" in source:
        text = io.StringIO(source)
    elif hasattr(source, "read"):
        raw = source.read()
        text = io.StringIO(raw.decode("utf-8") if isinstance(raw, bytes) else raw)
    else:
        text = open(source, "r", newline="")
    rows = []
    with text:
        reader = csv.reader(text)
        header = [h.strip() for h in next(reader)]
        try:
            si, ti, vi = header.index("stratum"), header.index("time"), header.index("value")
        except ValueError as exc:
            raise MissingColumn(str(exc)) from None
        for r, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append((int(float(row[si])), float(row[ti]), float(row[vi])))
            except ValueError:
                raise NonNumericCell(r, "stratum/time/value", row) from None
    if not rows:
        raise MissingColumn("no data rows in external table")
    strata = sorted({s for s, _, _ in rows})
    curves = []
    for s in strata:
        pts = sorted((t, v) for k, t, v in rows if k == s)
        times = np.array([t for t, _ in pts])
        vals = np.array([v for _, v in pts])
        if np.any(np.diff(vals) < 0) or vals.min() < 0 or vals.max() > 1:
            raise ValueError(f"external stratum {s} is not a CDF")
        curves.append(StepFunction(times, vals, 0.0))
    rule = StrataRule(cuts if cuts is not None else [])
    if rule.n_raw != len(curves):
        raise ValueError(
            f"strata rule yields {rule.n_raw} strata but the table has {len(curves)}"
        )
    return StepCdf(curves, rule, kind="external_table")
