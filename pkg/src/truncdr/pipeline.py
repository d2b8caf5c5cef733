"""One-call estimation: a frozen config maps any dataset to a report.

The config carries everything needed to refit from scratch, which is what
bootstrap replicates and simulation studies do.  Estimator ids:

``dr``     doubly robust (event + entry models)
``cf``     cross-fitted doubly robust
``ipw``    inverse probability of entry weighting (entry model only)
``reg1``   outcome regression anchored at the subject's entry time
``reg2``   outcome regression using the event-model mean
``pl``     truncation-adjusted product-limit curve, read at the target
``naive``  Kaplan-Meier ignoring entry times, read at the target
"""

from dataclasses import dataclass, replace

import numpy as np

from .data import default_tau
from .estimators import (
    EstimateReport,
    estimate_cf,
    estimate_dr,
    estimate_ipw_q,
    estimate_reg_t1,
    estimate_reg_t2,
)
from .functionals import Functional
from .learners import fit_nuisances
from .nonparam import kaplan_meier, product_limit_lt
from .nuisance import empirical_overlap_report

ESTIMATOR_IDS = ("dr", "cf", "ipw", "reg1", "reg2", "pl", "naive")


@dataclass(frozen=True)
class EstimatorConfig:
    """A reproducible estimation recipe."""

    estimator: str
    functional: Functional
    f_learner: object = "cox"
    g_learner: object = "cox"
    K: int = 10
    cf_seed: int = 1
    tau: float | None = None
    label: str | None = None

    def with_functional(self, nu):
        return replace(self, functional=nu)

    @property
    def estimator_id(self):
        return self.label or self.estimator


def curve_functional(curve, nu):
    """Read a target off a survival step curve.

    Survival indicator: the curve at the horizon.  Restricted mean: the
    exact piecewise integral of the curve up to the horizon.  Tabulated
    transformations integrate against the curve's probability mass (any
    unassigned tail mass is ignored).
    """
    if nu.kind == "survival_indicator":
        return float(curve(nu.t0))
    if nu.kind == "rmst":
        inner = curve.times[(curve.times > 0) & (curve.times < nu.t0)]
        ts = np.concatenate(([0.0], inner, [nu.t0]))
        return float((np.diff(ts) * np.atleast_1d(curve(ts[:-1]))).sum())
    mass = -np.diff(np.concatenate(([1.0], curve.values)))
    return float((nu.nu(curve.times) * mass).sum())


def estimate_cf_with_learners(ds, f_learner, g_learner, K, seed, nu, tau=None):
    """Cross-fitted estimator from learner specs (folds refit per call)."""
    tau = default_tau(ds) if tau is None else tau
    return estimate_cf(
        ds, lambda train: fit_nuisances(train, f_learner, g_learner, tau=tau),
        K, seed, nu,
    )


def run_estimator(ds, config):
    """Fit nuisances per the config and produce the estimate report."""
    nu = config.functional
    est = config.estimator
    tau = config.tau if config.tau is not None else default_tau(ds)
    if est == "dr":
        ns = fit_nuisances(ds, config.f_learner, config.g_learner, tau=tau)
        rep = estimate_dr(ds, ns, nu)
        rep.diagnostics.update(_nuisance_diagnostics(ns, ds))
    elif est == "cf":
        fold_fitter = lambda train: fit_nuisances(  # noqa: E731
            train, config.f_learner, config.g_learner, tau=tau
        )
        rep = estimate_cf(ds, fold_fitter, config.K, config.cf_seed, nu)
    elif est == "ipw":
        ns = fit_nuisances(ds, None, config.g_learner, tau=tau)
        rep = estimate_ipw_q(ds, ns.G_hat, nu, Sc_hat=ns.Sc_hat,
                             SD_hat=ns.SD_hat, eps_guard=ns.eps_guard)
    elif est in ("reg1", "reg2"):
        fn = estimate_reg_t1 if est == "reg1" else estimate_reg_t2
        ns = fit_nuisances(ds, config.f_learner, None, tau=tau)
        rep = fn(ds, ns.F_hat, nu, Sc_hat=ns.Sc_hat, SD_hat=ns.SD_hat,
                 eps_guard=ns.eps_guard)
    elif est == "pl":
        res = product_limit_lt(ds.q, ds.x, ds.delta, ds.weight)
        rep = EstimateReport(
            estimator_id="pl", theta_hat=curve_functional(res.curve, nu),
            n=ds.n, functional=nu.label(),
            diagnostics={"flags": res.flags},
        )
    elif est == "naive":
        res = kaplan_meier(ds.x, ds.delta, ds.weight)
        theta = curve_functional(res.curve, nu)
        se = None
        if ds.censoring == "none" or not np.any(np.asarray(ds.delta) == 0):
            vals = nu.nu(ds.x)
            se = float(vals.std(ddof=1) / np.sqrt(ds.n))
        rep = EstimateReport(
            estimator_id="naive", theta_hat=theta, n=ds.n, se_model=se,
            functional=nu.label(),
        )
    else:
        raise ValueError(f"unknown estimator {est!r}; choose from {ESTIMATOR_IDS}")
    rep.estimator_id = config.estimator_id
    return rep


def _nuisance_diagnostics(ns, ds):
    out = {"clamp_eps_f": ns.clamp_eps_f, "clamp_eps_g": ns.clamp_eps_g}
    for side, cdf in (("event_model", ns.F_hat), ("entry_model", ns.G_hat)):
        fit = getattr(getattr(cdf, "base", cdf), "source_fit", None) \
            or getattr(cdf, "source_fit", None)
        if fit is not None:
            out[side] = {
                "converged": bool(fit.converged),
                "iterations": int(fit.iterations),
                "psi": [float(v) for v in np.atleast_1d(fit.psi)],
            }
    try:
        ov = empirical_overlap_report(ns, ds)
        out["overlap_minima"] = ov.minima
        out["overlap_window"] = [ov.tau1, ov.tau2]
    except Exception:
        pass
    return out


def diagnostics_report(ds, tau=None):
    """Dependence test plus empirical overlap minima for a dataset."""
    from .inference import kendall_tau_conditional

    tau_stat, pval = kendall_tau_conditional(ds)
    out = {"kendall_tau": tau_stat, "p_value": pval}
    if ds.d >= 1:
        try:
            ns = fit_nuisances(ds, "cox", "cox", tau=tau)
            ov = empirical_overlap_report(ns, ds)
            out["overlap_minima"] = ov.minima
            out["overlap_window"] = [ov.tau1, ov.tau2]
        except Exception as exc:  # diagnostics stay best-effort
            out["overlap_error"] = str(exc)
    return out
