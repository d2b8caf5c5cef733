import numpy as np
import pytest

from truncdr.data import Dataset, residual_censoring_view
from truncdr.errors import StratumTooSmall
from truncdr.nonparam import (
    fit_SD,
    fit_Sc,
    kaplan_meier,
    product_limit_lt,
    stratified_conditional_pl,
)
from truncdr.sim import conditional_survival_at, generate_scenario


def bruteforce_pl(q, x, delta, w=None):
    """Literal product over event times with closed risk intervals."""
    w = np.ones_like(x) if w is None else w
    ts = sorted(set(x[(delta == 1) & (w > 0)]))
    surv, out = 1.0, []
    for s in ts:
        d = w[(x == s) & (delta == 1)].sum()
        r = w[(q <= s) & (s <= x)].sum()
        surv *= max(1.0 - d / r, 0.0)
        out.append((s, surv))
    return out


def test_hand_example():
    q = np.array([1.0, 2.0, 0.5])
    x = np.array([3.0, 5.0, 4.0])
    res = product_limit_lt(q, x)
    np.testing.assert_allclose(res.curve.times, [3.0, 4.0, 5.0])
    np.testing.assert_allclose(res.curve.values, [2 / 3, 1 / 3, 0.0])
    assert res.curve(2.9) == 1.0


def test_matches_bruteforce_random():
    rng = np.random.default_rng(8)
    for trial in range(5):
        n = 40
        x = rng.uniform(1, 10, n)
        q = x * rng.uniform(0, 0.95, n)
        delta = (rng.uniform(size=n) < 0.7).astype(float)
        if delta.sum() == 0:
            delta[0] = 1
        w = rng.uniform(0.5, 2.0, n)
        res = product_limit_lt(q, x, delta, w)
        for s, v in bruteforce_pl(q, x, delta, w):
            assert res.curve(s) == pytest.approx(v, abs=1e-12)


def test_km_equals_pl_with_zero_entry():
    rng = np.random.default_rng(1)
    x = rng.uniform(0.5, 5, 50)
    delta = (rng.uniform(size=50) < 0.6).astype(float)
    km = kaplan_meier(x, delta)
    pl = product_limit_lt(np.zeros_like(x), x, delta)
    assert km.curve == pl.curve


def test_weight_scaling_leaves_curve_unchanged():
    rng = np.random.default_rng(2)
    x = rng.uniform(1, 5, 30)
    q = x * rng.uniform(0, 0.9, 30)
    w = rng.uniform(0.5, 2.0, 30)
    a = product_limit_lt(q, x, weights=w).curve
    b = product_limit_lt(q, x, weights=2.0 * w).curve
    assert np.array_equal(a.times, b.times)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-14)


def test_all_censored_km():
    res = kaplan_meier(np.array([1.0, 2.0]), np.array([0.0, 0.0]))
    assert "no_events" in res.flags
    assert res.curve(100.0) == 1.0


def test_valid_survival_curves():
    rng = np.random.default_rng(3)
    x = rng.uniform(1, 10, 100)
    q = x * rng.uniform(0, 0.99, 100)
    c = product_limit_lt(q, x).curve
    assert c.value_before_first == 1.0
    assert np.all(np.diff(c.values) <= 1e-15)
    assert c.values.min() >= 0.0 and c.values.max() <= 1.0


def test_empty_risk_set_flagged():
    # the middle event exhausts its risk set while later events remain
    q = np.array([0.0, 0.0, 5.0])
    x = np.array([1.0, 2.0, 7.0])
    res = product_limit_lt(q, x)
    assert res.empty_risk_set_at == 2.0
    assert "empty_risk_set" in res.flags
    assert res.curve(3.0) == 0.0


def test_fit_Sc_no_censoring_is_one():
    ds = Dataset.from_arrays([0.1, 0.2], [1.0, 2.0], [1.0, 1.0], censoring="c1")
    S = fit_Sc(ds)
    assert S(0.5) == 1.0 and S(100.0) == 1.0


def test_fit_Sc_recovers_censoring_law():
    sim = generate_scenario("c1", 4000, seed=3)
    S = fit_Sc(sim.observed)
    grid = np.array([2.0, 3.0, 4.0, 5.0, 6.0])
    truth = np.exp(-(((grid - 1.0) / 7.0) ** 2))
    assert np.max(np.abs(np.asarray(S(grid)) - truth)) < 0.03
    assert abs(sim.censoring_rate - 0.165) < 0.02


def test_fit_SD_no_censoring_is_one():
    ds = Dataset.from_arrays([0.1], [1.0], [1.0], censoring="c2")
    S = fit_SD(residual_censoring_view(ds))
    assert S(0.5) == 1.0


def test_fit_SD_recovers_residual_law():
    sim = generate_scenario("c2", 4000, seed=9)
    S = fit_SD(residual_censoring_view(sim.observed))
    grid = np.array([0.5, 1.5, 2.5, 3.5])
    truth = np.exp(-((grid / 4.0) ** 2))
    assert np.max(np.abs(np.asarray(S(grid)) - truth)) < 0.03
    assert abs(sim.censoring_rate - 0.271) < 0.025


def test_single_stratum_matches_marginal(scen1_small):
    ds = scen1_small.observed
    cdf = stratified_conditional_pl(ds, bins=1)
    marg = product_limit_lt(ds.q, ds.x, ds.delta, ds.weight).curve
    grid = np.linspace(5, 12, 40)
    np.testing.assert_allclose(
        cdf.cdf_at(grid, ds.z[:3]), np.tile(1.0 - marg(grid), (3, 1)), atol=1e-14
    )


def test_degenerate_explicit_strata_raise(scen1_small):
    ds = scen1_small.observed
    cuts = [np.linspace(-1, 1, 400), np.array([0.0])]
    with pytest.raises(StratumTooSmall):
        stratified_conditional_pl(ds, cuts=cuts)


def test_stratum_curves_track_conditional_truth(scen1_1000):
    # split on the binary covariate only: within each half the curve should
    # approximate the z2-conditional survival averaged over z1
    ds = scen1_1000.observed
    cdf = stratified_conditional_pl(ds, cuts=[np.array([]), np.array([0.0])])
    rng = np.random.default_rng(0)
    z1 = rng.uniform(-1, 1, 20000)
    for z2, zrow in ((-0.5, np.array([[0.0, -0.5]])), (0.5, np.array([[0.0, 0.5]]))):
        truth = np.mean(conditional_survival_at("1", 7.0, z1, np.full_like(z1, z2)))
        est = 1.0 - float(cdf.cdf_at(np.array([7.0]), zrow)[0, 0])
        assert abs(est - truth) < 0.06
    lo = 1.0 - float(cdf.cdf_at(np.array([7.0]), np.array([[0.0, 0.5]]))[0, 0])
    hi = 1.0 - float(cdf.cdf_at(np.array([7.0]), np.array([[0.0, -0.5]]))[0, 0])
    assert lo < hi  # higher hazard for larger z2


def test_quantile_bins_merge_sparse_strata():
    rng = np.random.default_rng(5)
    n = 40
    x = rng.uniform(1, 5, n)
    q = x * rng.uniform(0, 0.8, n)
    z = rng.standard_normal((n, 2))
    ds = Dataset.from_arrays(q, x, np.ones(n), z)
    cdf = stratified_conditional_pl(ds, bins=5, min_events=10)
    # merging happened: far fewer strata than the 25 raw bins
    assert len(cdf.curves) <= 4
