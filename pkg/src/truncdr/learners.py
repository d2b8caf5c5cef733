"""Nuisance learner specifications and the fitting pipeline.

A learner spec is a small frozen recipe (model family, feature map, clamp
level) that can be refit on any dataset: bootstrap replicates, cross-fitting
folds and simulation replicates all clone fits through these objects.

The feature map lets the proportional hazards family be deliberately
misspecified in simulations: ``"raw"`` uses the covariates as given,
``"sq_int"`` replaces them with the square of the first and the product of
the first two.
"""

from dataclasses import dataclass

import numpy as np

from .condcdf import ConditionalCdf
from .coxlt import fit_cox_lt
from .data import Dataset, default_tau, residual_censoring_view
from .errors import CensoringPositivityViolation
from .nonparam import fit_SD, fit_Sc, stratified_conditional_pl
from .nuisance import NuisanceSet, default_overlap_window, fit_G_reverse


def _sq_int(z):
    if z.shape[1] < 2:
        raise ValueError("the sq_int feature map needs at least two covariates")
    return np.column_stack((z[:, 0] ** 2, z[:, 0] * z[:, 1]))


FEATURE_MAPS = {"raw": None, "sq_int": _sq_int}


class _FeatureCdf(ConditionalCdf):
    """Surface fitted on transformed covariates, evaluated on raw ones."""

    def __init__(self, base, feature_fn):
        self.base = base
        self.feature_fn = feature_fn
        self.kind = base.kind

    def _map(self, Z):
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z.reshape(1, -1)
        return self.feature_fn(Z)

    def grid(self):
        return self.base.grid()

    def cdf_at(self, times, Z):
        return self.base.cdf_at(times, self._map(Z))

    def before_grid(self, Z):
        return self.base.before_grid(self._map(Z))

    def cdf_diag(self, t, Z):
        return self.base.cdf_diag(t, self._map(Z))

    def cdf_mat(self, tmat, Z):
        return self.base.cdf_mat(tmat, self._map(Z))


def _maybe_map_ds(ds, feature_fn):
    if feature_fn is None:
        return ds
    return Dataset.from_arrays(ds.q, ds.x, ds.delta, feature_fn(ds.z),
                               ds.weight, ds.censoring, ds.label)


def _maybe_wrap(cdf, feature_fn):
    if feature_fn is None:
        return cdf
    wrapped = _FeatureCdf(cdf, feature_fn)
    if hasattr(cdf, "tau"):
        wrapped.tau = cdf.tau
    if hasattr(cdf, "source_fit"):
        wrapped.source_fit = cdf.source_fit
    return wrapped


@dataclass(frozen=True)
class CoxLearner:
    """Proportional hazards nuisance with optional feature map."""

    features: str = "raw"
    tol: float = 1e-9
    max_iter: int = 100
    clamp_eps: float = 0.0

    def _fn(self):
        return FEATURE_MAPS[self.features]

    def fit_event(self, ds):
        fit = fit_cox_lt(_maybe_map_ds(ds, self._fn()), tol=self.tol,
                         max_iter=self.max_iter)
        cdf = _maybe_wrap(fit.cdf_surface(), self._fn())
        cdf.source_fit = fit
        return cdf

    def fit_entry(self, ds, tau=None):
        cdf = fit_G_reverse(_maybe_map_ds(ds, self._fn()), learner="cox",
                            tau=tau, tol=self.tol, max_iter=self.max_iter)
        return _maybe_wrap(cdf, self._fn())


@dataclass(frozen=True)
class StratifiedPLLearner:
    """Covariate-stratified product-limit nuisance (the flexible slot)."""

    bins: int = 3
    min_events: int = 5
    clamp_eps: float = 0.05

    def fit_event(self, ds):
        return stratified_conditional_pl(ds, bins=self.bins,
                                         min_events=self.min_events)

    def fit_entry(self, ds, tau=None):
        return fit_G_reverse(ds, learner="stratified_pl", tau=tau,
                             bins=self.bins, min_events=self.min_events)


LEARNERS = {
    "cox": CoxLearner(),
    "cox_sq_int": CoxLearner(features="sq_int"),
    "stratified_pl": StratifiedPLLearner(),
}


def make_learner(spec):
    """Resolve a learner name or pass a learner object through."""
    if isinstance(spec, str):
        try:
            return LEARNERS[spec]
        except KeyError:
            raise ValueError(
                f"unknown learner {spec!r}; choose from {sorted(LEARNERS)}"
            ) from None
    return spec


def fit_nuisances(ds, f_learner, g_learner, tau=None, tau1=None, tau2=None):
    """Fit the full nuisance bundle appropriate to the censoring tag.

    - no censoring: event model on (q, x), entry model on the reversed clock;
    - censoring before entry (``c1``): the event model targets the
      possibly-censored time (all rows count as events), the censoring
      survival comes from the flipped-indicator product-limit fit, and the
      entry model reverses the possibly-censored time;
    - censoring after entry (``c2``): the event model is the usual fit on
      censored data, the residual censoring survival comes from the
      residual-time view, and the entry model is fit on the uncensored rows
      with inverse-residual-censoring case weights.
    """
    from .condcdf import degenerate

    f_learner = None if f_learner is None else make_learner(f_learner)
    g_learner = None if g_learner is None else make_learner(g_learner)
    tau = default_tau(ds) if tau is None else tau
    Sc = SD = None
    # a side may be skipped (None): estimators that ignore it receive the
    # matching degenerate surface
    fit_F = (lambda d: degenerate("F_zero")) if f_learner is None \
        else f_learner.fit_event
    fit_G = (lambda d, tau: degenerate("G_one")) if g_learner is None \
        else (lambda d, tau: g_learner.fit_entry(d, tau=tau))
    if ds.censoring == "none":
        F = fit_F(ds)
        G = fit_G(ds, tau)
    elif ds.censoring == "c1":
        all_events = Dataset.from_arrays(ds.q, ds.x, np.ones(ds.n), ds.z,
                                         ds.weight, "none", ds.label)
        F = fit_F(all_events)
        Sc = fit_Sc(ds)
        G = fit_G(all_events, tau)
    elif ds.censoring == "c2":
        F = fit_F(ds)
        SD = fit_SD(residual_censoring_view(ds))
        ev = np.asarray(ds.delta) == 1
        sd_own = np.asarray(SD(ds.x[ev] - ds.q[ev]), dtype=float)
        if np.any(sd_own <= 0):
            raise CensoringPositivityViolation(
                "residual censoring survival vanishes at an uncensored time"
            )
        g_ds = Dataset.from_arrays(
            ds.q[ev], ds.x[ev], np.ones(int(ev.sum())), ds.z[ev],
            ds.weight[ev] / sd_own, "none", ds.label,
        )
        G = fit_G(g_ds, tau)
    else:
        raise ValueError(ds.censoring)
    d1, d2 = default_overlap_window(ds)
    return NuisanceSet.build(
        F_hat=F, G_hat=G, Sc_hat=Sc, SD_hat=SD,
        clamp_eps_f=0.0 if f_learner is None else f_learner.clamp_eps,
        clamp_eps_g=0.0 if g_learner is None else g_learner.clamp_eps,
        tau1=d1 if tau1 is None else tau1, tau2=d2 if tau2 is None else tau2,
    )
