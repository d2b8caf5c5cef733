import numpy as np
import pytest

from truncdr.coxlt import conditional_cdf, fit_cox_lt, partial_loglik_and_score
from truncdr.data import Dataset
from truncdr.errors import NoEvents, SingularHessian
from truncdr.sim import conditional_survival_at, generate_scenario


def _random_lt_dataset(rng, n, d=2):
    z = rng.standard_normal((n, d))
    t = rng.exponential(2.0, n) * np.exp(-0.3 * z[:, 0]) + 0.2
    q = t * rng.uniform(0, 0.9, n)
    delta = (rng.uniform(size=n) < 0.8).astype(float)
    tag = "c2" if np.any(delta == 0) else "none"
    return Dataset.from_arrays(q, t, delta, z, censoring=tag)


def bruteforce_loglik_score(ds, psi, weights=None):
    """O(n^2) literal partial likelihood with closed risk sets [q, x]."""
    w = ds.weight if weights is None else np.asarray(weights, float)
    zc = ds.z - (w[:, None] * ds.z).sum(0) / w.sum()
    eta = zc @ psi
    ll, score = 0.0, np.zeros_like(psi)
    for i in range(ds.n):
        if ds.delta[i] != 1 or w[i] == 0:
            continue
        at_risk = (ds.q <= ds.x[i]) & (ds.x[i] <= ds.x)
        s0 = float((w * np.exp(eta) * at_risk).sum())
        s1 = (w[:, None] * np.exp(eta)[:, None] * zc * at_risk[:, None]).sum(0)
        ll += w[i] * (eta[i] - np.log(s0))
        score += w[i] * (zc[i] - s1 / s0)
    return ll, score


def test_matches_bruteforce_partial_likelihood():
    rng = np.random.default_rng(4)
    ds = _random_lt_dataset(rng, 60)
    for psi in (np.zeros(2), np.array([0.4, -0.2]), np.array([-1.0, 0.7])):
        ll, score = partial_loglik_and_score(ds, psi=psi)
        ll_b, score_b = bruteforce_loglik_score(ds, psi)
        assert abs(ll - ll_b) < 1e-9 * max(1, abs(ll_b))
        np.testing.assert_allclose(score, score_b, rtol=1e-9, atol=1e-9)


def test_score_matches_finite_differences():
    rng = np.random.default_rng(9)
    ds = _random_lt_dataset(rng, 50)
    psi = np.array([0.25, -0.4])
    _, score = partial_loglik_and_score(ds, psi=psi)
    h = 1e-5
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        lp, _ = partial_loglik_and_score(ds, psi=psi + e)
        lm, _ = partial_loglik_and_score(ds, psi=psi - e)
        fd = (lp - lm) / (2 * h)
        assert abs(fd - score[j]) <= 1e-6 * max(1.0, abs(fd))


def test_single_subject_loglik_zero():
    ds = Dataset.from_arrays([0.5], [2.0], [1.0], [[1.3]])
    ll, score = partial_loglik_and_score(ds, psi=np.array([0.7]))
    assert ll == pytest.approx(0.0, abs=1e-12)
    assert score[0] == pytest.approx(0.0, abs=1e-12)
    # a single subject carries no information: the fit cannot invert it
    with pytest.raises(SingularHessian):
        fit_cox_lt(ds)


def test_identical_covariates_singular():
    ds = Dataset.from_arrays([0.1, 0.2, 0.3], [1.0, 2.0, 3.0], np.ones(3),
                             [[1.0], [1.0], [1.0]])
    with pytest.raises(SingularHessian):
        fit_cox_lt(ds)


def test_no_events_raises():
    ds = Dataset.from_arrays([0.1, 0.2], [1.0, 2.0], [0.0, 0.0],
                             [[1.0], [2.0]], censoring="c2")
    with pytest.raises(NoEvents):
        fit_cox_lt(ds)


def test_score_at_optimum_below_tol(scen1_small):
    ds = scen1_small.observed
    fit = fit_cox_lt(ds, tol=1e-9)
    wn = ds.weight / ds.weight.mean()
    _, score = partial_loglik_and_score(ds, weights=wn, psi=fit.psi)
    assert np.max(np.abs(score)) <= 1e-9
    assert fit.converged


def test_scenario1_recovers_log_hazard_ratios(scen1_1000):
    fit = fit_cox_lt(scen1_1000.observed)
    se = fit.psi_se()
    assert abs(fit.psi[0] - 0.3) <= 3 * se[0]
    assert abs(fit.psi[1] - 0.5) <= 3 * se[1]


def test_weight_doubling_invariance(scen1_small):
    ds = scen1_small.observed
    fit1 = fit_cox_lt(ds)
    fit2 = fit_cox_lt(ds, weights=2.0 * ds.weight)
    np.testing.assert_allclose(fit2.psi, fit1.psi, rtol=0, atol=1e-12)
    np.testing.assert_allclose(fit2.baseline_cumhaz.values,
                               fit1.baseline_cumhaz.values, rtol=1e-12)
    assert np.array_equal(fit2.baseline_cumhaz.times, fit1.baseline_cumhaz.times)


def test_breslow_jumps_at_event_times_only(scen1_small):
    ds = scen1_small.observed
    fit = fit_cox_lt(ds)
    events = np.unique(ds.x[np.asarray(ds.delta) == 1])
    assert np.array_equal(fit.baseline_cumhaz.times, events)
    assert np.all(np.diff(fit.baseline_cumhaz.values) >= 0)
    assert fit.baseline_cumhaz(0.0) == 0.0


def test_conditional_cdf_basics(scen1_small):
    fit = fit_cox_lt(scen1_small.observed)
    surf = conditional_cdf(fit)
    z0 = np.zeros(2)
    t_first = fit.baseline_cumhaz.times[0]
    assert surf.cdf(t_first - 1e-9, z0) == 0.0
    # at zero covariates the link passes through the (un-centered) baseline
    t = fit.baseline_cumhaz.times[5]
    lam = fit.baseline_cumhaz(t) * np.exp(-fit.psi @ fit.center)
    assert surf.cdf(t, z0) == pytest.approx(1.0 - np.exp(-lam), rel=1e-12)
    curve = conditional_cdf(fit, z=np.array([0.3, 0.5]))
    assert np.all(np.diff(curve.values) >= 0)
    assert curve.values.min() >= 0 and curve.values.max() < 1


def test_centering_invariance_of_predictions(scen1_small):
    ds = scen1_small.observed
    fit = fit_cox_lt(ds)
    shifted = Dataset.from_arrays(ds.q, ds.x, ds.delta, ds.z + 5.0, ds.weight)
    fit2 = fit_cox_lt(shifted)
    np.testing.assert_allclose(fit2.psi, fit.psi, atol=1e-8)
    z = np.array([0.2, -0.5])
    c1 = conditional_cdf(fit, z=z)
    c2 = conditional_cdf(fit2, z=z + 5.0)
    np.testing.assert_allclose(c2.values, c1.values, rtol=1e-7, atol=1e-10)


def test_no_truncation_matches_unadjusted_bruteforce():
    rng = np.random.default_rng(12)
    n = 80
    z = rng.standard_normal((n, 2))
    x = rng.exponential(1.0, n) * np.exp(-0.4 * z[:, 0] + 0.2 * z[:, 1]) + 0.05
    ds = Dataset.from_arrays(np.zeros(n), x, np.ones(n), z)
    fit = fit_cox_lt(ds)
    # with all entries at zero the adjusted likelihood is the classical one
    ll, score = bruteforce_loglik_score(ds, fit.psi)
    assert np.max(np.abs(score)) < 1e-6


def test_scenario1_cdf_at_target_matches_truth(scen1_1000):
    # average F(7 | z) over fresh covariate draws tracks 1 - pr*(T > 7)
    fit = fit_cox_lt(scen1_1000.observed)
    surf = conditional_cdf(fit)
    rng = np.random.default_rng(3)
    z1 = rng.uniform(-1, 1, 4000)
    z2 = np.where(rng.uniform(size=4000) < 0.5, 0.5, -0.5)
    Z = np.column_stack((z1, z2))
    est = surf.cdf_diag(np.full(4000, 7.0), Z).mean()
    truth = 1.0 - np.mean(conditional_survival_at("1", 7.0, z1, z2))
    assert abs(est - truth) < 0.03


def test_nonconvergence_flag():
    sim = generate_scenario("1", 300, seed=21)
    fit = fit_cox_lt(sim.observed, max_iter=1)
    assert not fit.converged and fit.iterations == 1
