"""Independent oracles shared by the property and acceptance suites.

Everything here is deliberately written against different machinery than the
library paths it checks: explicit loops, scipy adaptive quadrature, and the
classical piecewise influence formula for the no-covariate product-limit
estimator.
"""

import numpy as np
from scipy.integrate import quad

from truncdr.condcdf import AnalyticCdf


def pl_influence_cdf_target(q, t, t0, F, f, G, beta):
    """Influence value of the product-limit estimator of pr*(T <= t0)
    under covariate-free random entry, by the classical three-branch
    formula (adaptive quadrature for the inner integral)."""
    theta = F(t0)

    def integ(a, b):
        if b <= a:
            return 0.0
        val, _ = quad(lambda v: f(v) / (G(v) * (1.0 - F(v)) ** 2), a, b,
                      epsabs=1e-13, epsrel=1e-13, limit=500)
        return val

    if t0 < q:
        return 0.0
    if q <= t0 <= t:
        return -beta * (1.0 - theta) * integ(q, t0)
    return beta * (1.0 - theta) * (1.0 / (G(t) * (1.0 - F(t))) - integ(q, t))


# --- analytic laws for the covariate-free comparison -----------------------


def expo_shift_cdf(rate=0.8):
    """F: exponential event law (never reaches one)."""
    cdf = lambda t: 1.0 - np.exp(-rate * np.maximum(t, 0.0))  # noqa: E731
    pdf = lambda t: rate * np.exp(-rate * np.maximum(t, 0.0)) * (t > 0)  # noqa: E731
    return cdf, pdf


def uniform_cdf(b=6.0):
    """G: uniform entry law on (0, b)."""
    cdf = lambda v: np.clip(np.asarray(v, dtype=float) / b, 0.0, 1.0)  # noqa: E731
    pdf = lambda v: ((np.asarray(v) > 0) & (np.asarray(v) < b)) / b  # noqa: E731
    return cdf, pdf


def analytic_pair(rate=0.8, b=6.0):
    """The same laws wrapped as library surfaces (z is ignored)."""
    fc, fp = expo_shift_cdf(rate)
    gc, gp = uniform_cdf(b)
    F = AnalyticCdf(lambda t, Z: fc(t), lambda t, Z: fp(t), breakpoints=(0.0,), d=0)
    G = AnalyticCdf(lambda t, Z: gc(t), lambda t, Z: gp(t), breakpoints=(0.0, b), d=0)
    return F, G, fc, fp, gc, gp


def wrong_event_cdf():
    """A covariate-free Weibull event law, deliberately misspecified for
    scenario 1 (wrong shape, no covariate effect)."""
    def cdf(t, Z):
        u = np.maximum(np.asarray(t, dtype=float) - 5.0, 0.0)
        return 1.0 - np.exp(-((u / 2.2) ** 1.5))

    def pdf(t, Z):
        u = np.maximum(np.asarray(t, dtype=float) - 5.0, 0.0)
        return (1.5 / 2.2) * (u / 2.2) ** 0.5 * np.exp(-((u / 2.2) ** 1.5)) * (u > 0)

    return AnalyticCdf(cdf, pdf, breakpoints=(5.0,), d=2)


def wrong_entry_cdf():
    """A covariate-free uniform entry law on (0, 9), misspecified for
    scenario 1 but supported everywhere the data live."""
    def cdf(q, Z):
        return np.clip(np.asarray(q, dtype=float) / 9.0, 0.0, 1.0)

    def pdf(q, Z):
        qq = np.asarray(q, dtype=float)
        return ((qq > 0) & (qq < 9.0)) / 9.0

    return AnalyticCdf(cdf, pdf, breakpoints=(0.0, 9.0), d=2)
