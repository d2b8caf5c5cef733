"""truncdr: doubly robust estimation of transformed survival means under
covariate-dependent left truncation, with optional right censoring."""

from .condcdf import AnalyticCdf, clamp_overlap, degenerate
from .coxlt import CoxFit, conditional_cdf, fit_cox_lt, partial_loglik_and_score
from .data import (
    Dataset,
    FoldAssignment,
    Observation,
    load_dataset,
    residual_censoring_view,
    reverse_time,
    save_dataset,
    split_folds,
)
from .estimators import (
    EstimateReport,
    augmentation_integral,
    eic_value,
    estimate_cf,
    estimate_dr,
    estimate_dr_c1,
    estimate_dr_c2,
    estimate_ipw_q,
    estimate_reg_t1,
    estimate_reg_t2,
    estimating_function_values,
    identification_check,
    solve_theta_bisect,
)
from .functionals import Functional, rmst, survival_indicator, tabulated
from .inference import bootstrap, kendall_tau_conditional
from .learners import CoxLearner, StratifiedPLLearner, fit_nuisances
from .nonparam import (
    fit_SD,
    fit_Sc,
    kaplan_meier,
    product_limit_lt,
    stratified_conditional_pl,
)
from .nuisance import (
    NuisanceSet,
    empirical_overlap_report,
    fit_G_reverse,
    load_external_cdf,
)
from .pipeline import EstimatorConfig, estimate_cf_with_learners, run_estimator
from .stepfun import StepFunction

__version__ = "0.1.0"

__all__ = [
    "AnalyticCdf", "clamp_overlap", "degenerate",
    "CoxFit", "conditional_cdf", "fit_cox_lt", "partial_loglik_and_score",
    "Dataset", "FoldAssignment", "Observation", "load_dataset",
    "residual_censoring_view", "reverse_time", "save_dataset", "split_folds",
    "EstimateReport", "augmentation_integral", "eic_value", "estimate_cf",
    "estimate_dr", "estimate_dr_c1", "estimate_dr_c2", "estimate_ipw_q",
    "estimate_reg_t1", "estimate_reg_t2", "estimating_function_values",
    "identification_check", "solve_theta_bisect",
    "Functional", "rmst", "survival_indicator", "tabulated",
    "bootstrap", "kendall_tau_conditional",
    "CoxLearner", "StratifiedPLLearner", "fit_nuisances",
    "fit_SD", "fit_Sc", "kaplan_meier", "product_limit_lt",
    "stratified_conditional_pl",
    "NuisanceSet", "empirical_overlap_report", "fit_G_reverse",
    "load_external_cdf",
    "EstimatorConfig", "estimate_cf_with_learners", "run_estimator",
    "StepFunction",
]
