"""Point estimators of the transformed-survival-time mean.

Everything here solves one linear estimating equation.  Writing
``m(v,z) = int_0^v nu dF(.|z)``, the per-subject contribution is

    U(theta) = {nu(X) - theta}/G(X|Z)
               + {m(Q,Z) - theta F(Q|Z)} / [G(Q|Z){1 - F(Q|Z)}]
               - sum_{jumps v of G(.|Z), Q <= v < X}
                     {m(v,Z) - theta F(v,Z)} dG(v|Z) / [G(v|Z)^2 {1 - F(v|Z)}],

which is the entry-time backward-martingale integral expanded in closed
form: the counting measure places mass at the subject's own entry time, and
the compensator is an exact finite sum over the fitted entry model's jumps
(no quadrature is ever used for fitted, step-function nuisances).  Setting
``F = 0`` collapses the solution to inverse-probability-of-entry weighting;
setting ``G = 1`` collapses it to the outcome-regression estimator.

Under right censoring the same skeleton applies with censoring-compensating
weights: when censoring can precede entry, the event-model measures are
reweighted inside the integrals by the inverse censoring survival; when
censoring only follows entry, each uncensored subject's whole contribution
is weighted by the inverse residual-censoring survival.

Analytic (closed-form) nuisances are supported for simulation oracles: with
a step event model the compensator integral has an exact piecewise closed
form, and with a smooth event model it is evaluated by panelled
Gauss-Legendre quadrature.
"""

from dataclasses import dataclass, field

import numpy as np

from ._quad import panel_integrate
from .data import split_folds
from .errors import (
    CensoringPositivityViolation,
    DegenerateDenominator,
    OverlapViolation,
    WrongCensoringTag,
)

Z195 = 1.96


# ---------------------------------------------------------------------------
# reports


@dataclass
class EstimateReport:
    """A point estimate with its companions.

    ``beta_hat`` estimates the full-data selection probability pr*(Q < T).
    ``se_model`` is the analytic standard error where one exists (the
    sandwich for weighting-only estimators, the influence-based estimator
    for the doubly robust ones); resampling fills ``se_boot``/``ci_boot``.
    The point estimate is never truncated to [0, 1], even for survival
    probabilities.
    """

    estimator_id: str
    theta_hat: float
    n: int
    functional: str = ""
    beta_hat: float | None = None
    se_model: float | None = None
    se_boot: float | None = None
    ci_model: tuple | None = None
    ci_boot: tuple | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.se_model is not None and self.ci_model is None:
            h = Z195 * self.se_model
            self.ci_model = (self.theta_hat - h, self.theta_hat + h)

    def to_dict(self):
        out = {
            "estimator": self.estimator_id,
            "theta_hat": self.theta_hat,
            "beta_hat": self.beta_hat,
            "se_model": self.se_model,
            "se_boot": self.se_boot,
            "ci_model": list(self.ci_model) if self.ci_model else None,
            "ci_boot": list(self.ci_boot) if self.ci_boot else None,
            "n": self.n,
            "functional": self.functional,
            "diagnostics": self.diagnostics,
        }
        return out


# ---------------------------------------------------------------------------
# event-side measures: F, m = int nu dF, r = int s dF


class _EventModel:
    """Per-dataset evaluation of the event model and its nu-measures.

    ``scale`` reweights the measure inside the integrals (the inverse
    censoring survival when censoring can precede entry); ``r`` is the
    measure of the scale alone, so with no scale ``r = F``.  With an
    unscaled survival indicator the measures collapse to CDF differences,
    ``m(v) = (F(v) - F(t0))_+`` and ``r = F``, and the per-grid machinery is
    skipped; other transformations materialize cumulative measures on the
    event model's jump grid.
    """

    def __init__(self, F, Z, nu, scale=None):
        self.F = F
        self.Z = Z
        self.nu = nu
        self.scale = scale
        self.grid = F.grid()
        if self.grid is None and scale is not None:
            raise ValueError("inner censoring scales need a step event model")
        self._plain_indicator = scale is None and nu.kind == "survival_indicator"
        self._Ft0 = F.cdf_diag(np.full(Z.shape[0], nu.t0), Z) \
            if self._plain_indicator else None
        self._vals = self._mcum = self._rcum = None

    def _materialize(self):
        if self._vals is not None or self.grid is None:
            return
        g = self.grid
        vals = self.F.cdf_at(g, self.Z)
        before = self.F.before_grid(self.Z)[:, None]
        dF = np.diff(np.concatenate((before, vals), axis=1), axis=1)
        if self.scale is None:
            s = np.ones(g.size)
        else:
            # a censoring curve that dies at the very top poisons only the
            # cumulative measures beyond the last usable time; those entries
            # are never gathered, so the division is left to run and misuse
            # is caught by finiteness checks at the points of use
            with np.errstate(divide="ignore"):
                s = 1.0 / np.asarray(self.scale(g), dtype=float)
        self._vals = vals
        with np.errstate(invalid="ignore"):
            self._mcum = np.cumsum(dF * (self.nu.nu(g) * s)[None, :], axis=1)
            self._rcum = np.cumsum(dF * s[None, :], axis=1)

    def _ind_m(self, t, Fv):
        t0 = self.nu.t0
        Ft0 = self._Ft0[:, None] if np.ndim(Fv) == 2 else self._Ft0
        return np.where(np.asarray(t) >= t0, np.maximum(Fv - Ft0, 0.0), 0.0)

    # --- gathers on the event grid ----------------------------------------
    def _gather(self, cum, t):
        if self.grid.size == 0:
            return np.zeros(np.shape(t))
        idx = np.searchsorted(self.grid, t, side="right") - 1
        safe = np.maximum(idx, 0)
        if np.ndim(t) == 2:
            picked = np.take_along_axis(cum, safe, axis=1)
        else:
            picked = cum[np.arange(cum.shape[0]), safe]
        return np.where(idx < 0, 0.0, picked)

    def _gather_shared(self, cum, times):
        if self.grid.size == 0:
            return np.zeros((self.Z.shape[0], np.size(times)))
        idx = np.searchsorted(self.grid, times, side="right") - 1
        picked = cum[:, np.maximum(idx, 0)]
        return np.where(idx[None, :] < 0, 0.0, picked)

    # --- F, m, r at shared grid columns / diagonal / matrices -------------
    def F_shared(self, times):
        return self.F.cdf_at(times, self.Z)

    def F_diag(self, t):
        return self.F.cdf_diag(t, self.Z)

    def F_mat(self, tmat):
        return self.F.cdf_mat(tmat, self.Z)

    def m_from_F_shared(self, times, Fvals):
        """m at sorted shared times, reusing a computed F(times|Z) matrix."""
        if self._plain_indicator:
            out = np.maximum(Fvals - self._Ft0[:, None], 0.0)
            out[:, : np.searchsorted(times, self.nu.t0)] = 0.0
            return out
        return self.m_shared(times)

    def r_from_F_shared(self, times, Fvals):
        if self._plain_indicator or self.grid is None:
            return Fvals
        return self.r_shared(times)

    def m_shared(self, times):
        if self._plain_indicator:
            return self._ind_m(times, self.F_shared(times))
        if self.grid is None:
            return self._m_analytic(np.broadcast_to(times[None, :],
                                                    (self.Z.shape[0], times.size)))
        self._materialize()
        return self._gather_shared(self._mcum, times)

    def m_diag(self, t):
        if self._plain_indicator:
            return self._ind_m(t, self.F_diag(t))
        if self.grid is None:
            return self._m_analytic(np.asarray(t, dtype=float))
        self._materialize()
        return self._gather(self._mcum, t)

    def m_mat(self, tmat):
        if self._plain_indicator:
            return self._ind_m(tmat, self.F_mat(tmat))
        if self.grid is None:
            return self._m_analytic(tmat)
        self._materialize()
        return self._gather(self._mcum, tmat)

    def r_shared(self, times):
        if self._plain_indicator or self.grid is None:
            return self.F_shared(times)
        self._materialize()
        return self._gather_shared(self._rcum, times)

    def r_diag(self, t):
        if self._plain_indicator or self.grid is None:
            return self.F_diag(t)
        self._materialize()
        return self._gather(self._rcum, t)

    def r_mat(self, tmat):
        if self._plain_indicator or self.grid is None:
            return self.F_mat(tmat)
        self._materialize()
        return self._gather(self._rcum, tmat)

    def mu(self):
        """m at infinity: the model mean of nu against the event measure."""
        if self._plain_indicator:
            top = self.F_diag(np.full(self.Z.shape[0], np.inf)) \
                if self.grid is not None else np.ones(self.Z.shape[0])
            return np.maximum(top - self._Ft0, 0.0)
        if self.grid is None:
            return self._mu_analytic()
        if self.grid.size == 0:
            return np.zeros(self.Z.shape[0])
        self._materialize()
        return self._mcum[:, -1]

    # --- analytic (smooth closed-form) event models ------------------------
    def _m_analytic(self, t):
        nu = self.nu
        Fv = self.F.cdf_fn(t, self.Z) if np.ndim(t) == 2 else self.F.cdf_diag(t, self.Z)
        if nu.kind == "survival_indicator":
            return self._ind_m(t, Fv)
        if nu.kind == "rmst":
            t0 = nu.t0
            w = np.minimum(t, t0)
            shape = np.shape(t)
            wf = np.asarray(w, dtype=float).reshape(-1)
            reps = 1 if np.ndim(t) <= 1 else np.shape(t)[1]
            Zrep = np.repeat(self.Z, reps, axis=0) if reps > 1 else self.Z
            intF = panel_integrate(
                lambda tt: self.F.cdf_fn(tt, Zrep),
                np.zeros_like(wf), wf,
                breakpoints=self.F.breakpoints, order=48,
            ).reshape(shape)
            Fw = self.F.cdf_fn(w, self.Z) if np.ndim(t) == 2 else self.F.cdf_diag(w, self.Z)
            return w * Fw - intF + t0 * np.maximum(Fv - Fw, 0.0)
        raise ValueError("analytic event models support the built-in transformations")

    def _mu_analytic(self):
        n = self.Z.shape[0]
        if self.nu.kind == "survival_indicator":
            return 1.0 - self.F.cdf_diag(np.full(n, self.nu.t0), self.Z)
        if self.nu.kind == "rmst":
            t0 = self.nu.t0
            intF = panel_integrate(
                lambda tt: self.F.cdf_fn(tt, self.Z),
                np.zeros(n), np.full(n, t0),
                breakpoints=self.F.breakpoints, order=48,
            )
            return t0 - intF
        raise ValueError("analytic event models support the built-in transformations")


# ---------------------------------------------------------------------------
# the augmentation (entry-martingale) terms


def _window_sums(term, lo, hi):
    cs = np.cumsum(term, axis=1)
    rows = np.arange(term.shape[0])
    upper = np.where(hi > 0, cs[rows, hi - 1], 0.0)
    lower = np.where(lo > 0, cs[rows, np.maximum(lo - 1, 0)], 0.0)
    return upper - lower


def _check_floor(name, values, guard, where=None):
    v = values if where is None else values[where]
    if v.size and np.min(v) <= guard:
        at = float(np.min(v))
        raise OverlapViolation(at=name, value=at, what=name)


def _aug_step(q, x, em, G, Z, guard, active):
    """Exact jump-sum augmentation terms against a step entry model.

    Returns (augN, augD): the numerator measure uses m, the denominator
    measure uses r; both equal ``h(Q) - sum_window h(v) dG(v)/G(v)`` with
    ``h = measure / [G (1-F)]``.
    """
    g = G.grid()
    n = q.shape[0]
    if g.size:
        j0 = np.searchsorted(g, q.min(), side="left")
        j1 = np.searchsorted(g, x.max(), side="left")
    else:
        j0 = j1 = 0
    if j1 > j0:
        gr = g[j0:j1]
        lo = np.searchsorted(gr, q, side="left")
        hi = np.searchsorted(gr, x, side="left")
        Gt = G.cdf_at(gr, Z)
        anchor = G.before_grid(Z) if j0 == 0 else G.cdf_at(g[j0 - 1:j0], Z)[:, 0]
        dG = np.diff(np.concatenate((anchor[:, None], Gt), axis=1), axis=1)
        Ft = em.F_shared(gr)
        one_mF = 1.0 - Ft
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = Gt * Gt
            denom *= one_mF
            base = np.divide(dG, denom, out=denom)
        if not np.all(np.isfinite(base)):
            # degenerate values somewhere on the grid: keep only live window
            # entries and verify the floor there
            inwin = (np.arange(gr.size)[None, :] >= lo[:, None]) \
                & (np.arange(gr.size)[None, :] < hi[:, None]) & active[:, None]
            live = inwin & (dG > 0)
            _check_floor("entry model inside augmentation window", Gt, guard, live)
            _check_floor("event survival inside augmentation window", one_mF,
                         guard, live)
            base = np.where(live, base, 0.0)
        elif guard > 0:
            inwin = (np.arange(gr.size)[None, :] >= lo[:, None]) \
                & (np.arange(gr.size)[None, :] < hi[:, None]) & active[:, None]
            live = inwin & (dG > 0)
            _check_floor("entry model inside augmentation window", Gt, guard, live)
            _check_floor("event survival inside augmentation window", one_mF,
                         guard, live)
        sumN = _window_sums(em.m_from_F_shared(gr, Ft) * base, lo, hi)
        rvals = em.r_from_F_shared(gr, Ft)
        rvals = rvals * base if rvals is not Ft else Ft * base
        sumD = _window_sums(rvals, lo, hi)
    else:
        sumN = sumD = np.zeros(n)
    GQ = G.cdf_diag(q, Z)
    FQ = em.F_diag(q)
    mQ = em.m_diag(q)
    rQ = em.r_diag(q)
    massQ = active & ((mQ != 0.0) | (rQ != 0.0) | (FQ != 0.0))
    _check_floor("entry model at own entry time", GQ, guard, massQ)
    _check_floor("event survival at own entry time", 1.0 - FQ, guard, massQ)
    with np.errstate(divide="ignore", invalid="ignore"):
        denomQ = np.where(massQ, GQ * (1.0 - FQ), 1.0)
        hNQ = np.where(massQ, mQ / denomQ, 0.0)
        hDQ = np.where(massQ, rQ / denomQ, 0.0)
    return hNQ - sumN, hDQ - sumD


def _aug_analytic(q, x, em, G, Z, guard, active):
    """Augmentation terms against a smooth entry model.

    With a step event model the compensator integral is exact: on each piece
    between event-model jumps the integrand is ``c * dG/G^2`` with constant
    ``c = measure/(1-F)``, and ``int dG/G^2 = 1/G(a) - 1/G(b)``, so the whole
    augmentation telescopes to

        c(X-)/G(X) - sum_{event-model jumps v in (Q, X)} (jump of c at v)/G(v).

    With a smooth event model the integral is evaluated by panelled
    quadrature.
    """
    n = q.shape[0]
    GQ = G.cdf_diag(q, Z)
    _check_floor("entry model at own entry time", GQ, guard, active)
    if em.grid is not None:
        # piecewise-exact: between event-model jumps the integrand is
        # c * dG/G^2 with constant c = measure/(1-F), and the pieces
        # telescope against the counting-measure mass at Q
        em._materialize()
        g = em.grid
        Gx = G.cdf_diag(x, Z)
        _check_floor("entry model at own event time", Gx, guard, active)
        with np.errstate(divide="ignore", invalid="ignore"):
            one_mF = 1.0 - em._vals
            cN = em._mcum / one_mF
            cD = em._rcum / one_mF
            prevN = np.concatenate((np.zeros((n, 1)), cN[:, :-1]), axis=1)
            prevD = np.concatenate((np.zeros((n, 1)), cD[:, :-1]), axis=1)
            Gg = G.cdf_at(g, Z) if g.size else np.ones((n, 0))
            jmpN = (cN - prevN) / Gg
            jmpD = (cD - prevD) / Gg
        lo = np.searchsorted(g, q, side="right")   # strictly inside (Q, X)
        hi = np.maximum(np.searchsorted(g, x, side="left"), lo)
        mask = (np.arange(g.size)[None, :] >= lo[:, None]) \
            & (np.arange(g.size)[None, :] < hi[:, None]) & active[:, None]
        sumN = _window_sums(np.where(mask, jmpN, 0.0), lo, hi)
        sumD = _window_sums(np.where(mask, jmpD, 0.0), lo, hi)
        # c at X-: value on the piece reaching X from the left
        idx = np.searchsorted(g, x, side="left") - 1
        rows = np.arange(n)
        cNx = np.where(idx < 0, 0.0, cN[rows, np.maximum(idx, 0)])
        cDx = np.where(idx < 0, 0.0, cD[rows, np.maximum(idx, 0)])
        with np.errstate(divide="ignore", invalid="ignore"):
            augN = np.where(active, cNx / Gx - sumN, 0.0)
            augD = np.where(active, cDx / Gx - sumD, 0.0)
        used = active & ~(np.isfinite(augN) & np.isfinite(augD))
        if np.any(used):
            raise OverlapViolation(
                at=float(x[used][0]), value=np.nan,
                what="degenerate nuisance inside augmentation window",
            )
        return augN, augD
    # smooth event model: quadrature, exact up to panelled Gauss-Legendre
    FQ = em.F_diag(q)
    _check_floor("event survival at own entry time", 1.0 - FQ, guard, active)
    breaks = set(getattr(G, "breakpoints", ()))
    breaks.update(getattr(em.F, "breakpoints", ()))
    if em.nu.kind in ("survival_indicator", "rmst"):
        breaks.add(em.nu.t0)

    def integrand(build):
        def f(tmat):
            Gv = G.cdf_fn(tmat, Z)
            gv = G.pdf_at(tmat, Z)
            Fv = em.F.cdf_fn(tmat, Z)
            return build(tmat, Gv, gv, Fv)
        return f

    sumN = panel_integrate(
        integrand(lambda t, Gv, gv, Fv: em.m_mat(t) * gv / (Gv * Gv * (1.0 - Fv))),
        q, x, breakpoints=breaks, order=64,
    )
    sumD = panel_integrate(
        integrand(lambda t, Gv, gv, Fv: em.r_mat(t) * gv / (Gv * Gv * (1.0 - Fv))),
        q, x, breakpoints=breaks, order=64,
    )
    denomQ = GQ * (1.0 - FQ)
    augN = np.where(active, em.m_diag(q) / denomQ - sumN, 0.0)
    augD = np.where(active, em.r_diag(q) / denomQ - sumD, 0.0)
    return augN, augD


def _aug_terms(q, x, em, G, Z, guard, active=None):
    active = np.ones(q.shape[0], dtype=bool) if active is None else active
    if G.grid() is not None:
        return _aug_step(q, x, em, G, Z, guard, active)
    return _aug_analytic(q, x, em, G, Z, guard, active)


# ---------------------------------------------------------------------------
# per-observation and per-dataset estimating-function pieces


def augmentation_integral(obs, F_hat, G_hat, nu, theta=0.0, role="dr_numerator",
                          inner_scale=None, eps_guard=0.0):
    """Closed-form value of the entry-martingale augmentation for one subject.

    ``role="dr_numerator"`` integrates ``h = [m - theta F] / [G(1-F)]``;
    ``role="dr_denominator"`` integrates ``h = F/[G(1-F)]`` (with an inner
    censoring scale, the scaled measures replace ``m`` and ``F``).  The value
    returned is ``h(Q) - sum_{G jumps in [Q, X)} h(v) dG(v|z)/G(v|z)``, a
    finite sum for fitted step nuisances.
    """
    q = np.array([obs.q])
    x = np.array([obs.x])
    Z = np.asarray(obs.z, dtype=float).reshape(1, -1)
    em = _EventModel(F_hat, Z, nu, scale=inner_scale)
    augN, augD = _aug_terms(q, x, em, G_hat, Z, eps_guard)
    if role == "dr_numerator":
        return float(augN[0] - theta * augD[0])
    if role == "dr_denominator":
        return float(augD[0])
    raise ValueError("role must be 'dr_numerator' or 'dr_denominator'")


def augmentation_values(ds, F_hat, G_hat, nu, theta=0.0, role="dr_numerator",
                        inner_scale=None, eps_guard=0.0):
    """Vectorized :func:`augmentation_integral` over a whole dataset."""
    em = _EventModel(F_hat, ds.z, nu, scale=inner_scale)
    augN, augD = _aug_terms(ds.q, ds.x, em, G_hat, ds.z, eps_guard)
    if role == "dr_numerator":
        return augN - theta * augD
    if role == "dr_denominator":
        return augD
    raise ValueError("role must be 'dr_numerator' or 'dr_denominator'")


def _components(ds, F, G, nu, inner_scale=None, w1=None, w2=None, sx=None,
                eps_guard=0.0):
    """Per-subject numerator/denominator components (a_i, b_i) and the
    entry-weight factors used by the selection-probability estimate."""
    q, x, Z = ds.q, ds.x, ds.z
    active = (w2 if w2 is not None else np.ones(ds.n)) > 0
    em = _EventModel(F, Z, nu, scale=inner_scale)
    augN, augD = _aug_terms(q, x, em, G, Z, eps_guard, active=active)
    Gx = G.cdf_diag(x, Z)
    first_active = (w1 if w1 is not None else np.ones(ds.n)) > 0
    _check_floor("entry model at own event time", Gx, eps_guard, first_active)
    w1 = np.ones(ds.n) if w1 is None else w1
    w2 = np.ones(ds.n) if w2 is None else w2
    sx = np.ones(ds.n) if sx is None else sx
    with np.errstate(divide="ignore", invalid="ignore"):
        ipw_term = np.where(first_active, w1 * sx / Gx, 0.0)
    a = ipw_term * nu.nu(x) + w2 * augN
    b = ipw_term + w2 * augD
    bad = (first_active | active) & ~(np.isfinite(a) & np.isfinite(b))
    if np.any(bad):
        raise CensoringPositivityViolation(
            "unbounded weights or measures entered the estimating function "
            f"(first at x={float(x[bad][0])})"
        )
    return a, b, ipw_term


def estimating_function_values(ds, F, G, nu, theta, inner_scale=None,
                               w1=None, w2=None, sx=None, eps_guard=0.0):
    """Per-subject values of the estimating function at ``theta``."""
    a, b, _ = _components(ds, F, G, nu, inner_scale, w1, w2, sx, eps_guard)
    return a - theta * b


def _finalize(ds, a, b, ipw_term, estimator_id, nu, diagnostics=None):
    w = ds.weight
    sw = w.sum()
    denom = float((w * b).sum())
    if denom <= 0:
        raise DegenerateDenominator(f"denominator sum {denom} is not positive")
    theta = float((w * a).sum()) / denom
    mean_inv = float((w * ipw_term).sum()) / sw
    beta = 1.0 / mean_inv if mean_inv > 0 else None
    U = a - theta * b
    if beta is not None:
        sigma2 = beta ** 2 * float((w * U * U).sum()) / sw
        n_eff = sw ** 2 / float((w * w).sum())
        se = float(np.sqrt(sigma2 / n_eff))
    else:
        se = None
    return EstimateReport(
        estimator_id=estimator_id, theta_hat=theta, beta_hat=beta,
        se_model=se, n=ds.n, functional=nu.label(),
        diagnostics=diagnostics or {},
    )


def _censoring_factors(ds, Sc_hat=None, SD_hat=None):
    """(inner_scale, w1, w2, sx) implementing the two censoring regimes."""
    delta = np.asarray(ds.delta, dtype=float)
    if ds.censoring == "none":
        return None, None, None, None
    if ds.censoring == "c1":
        if Sc_hat is None:
            raise WrongCensoringTag("tag 'c1' needs a censoring survival estimate")
        scx = np.asarray(Sc_hat(ds.x), dtype=float)
        bad = (delta == 1) & (scx <= 0)
        if np.any(bad):
            raise CensoringPositivityViolation(
                f"censoring survival vanishes at t={float(ds.x[bad][0])}"
            )
        with np.errstate(divide="ignore"):
            sx = np.where(delta == 1, 1.0 / np.where(scx > 0, scx, 1.0), 0.0)
        return (lambda t: np.asarray(Sc_hat(t), dtype=float)), delta, delta, sx
    if ds.censoring == "c2":
        if SD_hat is None:
            raise WrongCensoringTag("tag 'c2' needs a residual-censoring survival estimate")
        sd = np.asarray(SD_hat(ds.x - ds.q), dtype=float)
        bad = (delta == 1) & (sd <= 0)
        if np.any(bad):
            raise CensoringPositivityViolation(
                f"residual censoring survival vanishes at t={float((ds.x - ds.q)[bad][0])}"
            )
        with np.errstate(divide="ignore"):
            wfac = np.where(delta == 1, delta / np.where(sd > 0, sd, 1.0), 0.0)
        return None, wfac, wfac, None
    raise WrongCensoringTag(ds.censoring)


# ---------------------------------------------------------------------------
# the estimators


def estimate_dr(ds, ns, nu):
    """Doubly robust estimator: closed-form root of the estimating equation.

    Consistent when either the event model or the entry model in ``ns`` is
    correct; the model standard error is valid when both are.  Dispatches on
    the dataset's censoring tag using the censoring survivals in ``ns``.
    """
    inner, w1, w2, sx = _censoring_factors(ds, ns.Sc_hat, ns.SD_hat)
    a, b, ipw_term = _components(
        ds, ns.F_hat, ns.G_hat, nu, inner, w1, w2, sx, ns.eps_guard
    )
    return _finalize(ds, a, b, ipw_term, "dr", nu)


def estimate_dr_c1(ds, F_x, G, Sc, nu, eps_guard=0.0):
    """Doubly robust estimator when censoring can precede entry."""
    if ds.censoring != "c1":
        raise WrongCensoringTag("estimate_dr_c1 requires censoring tag 'c1'")
    from .nuisance import NuisanceSet

    ns = NuisanceSet(F_hat=F_x, G_hat=G, Sc_hat=Sc,
                     clamp_eps_f=eps_guard, clamp_eps_g=eps_guard)
    return estimate_dr(ds, ns, nu)


def estimate_dr_c2(ds, F, G, SD, nu, eps_guard=0.0):
    """Doubly robust estimator when censoring only follows entry."""
    if ds.censoring != "c2":
        raise WrongCensoringTag("estimate_dr_c2 requires censoring tag 'c2'")
    from .nuisance import NuisanceSet

    ns = NuisanceSet(F_hat=F, G_hat=G, SD_hat=SD,
                     clamp_eps_f=eps_guard, clamp_eps_g=eps_guard)
    return estimate_dr(ds, ns, nu)


def estimate_ipw_q(ds, G_hat, nu, Sc_hat=None, SD_hat=None, eps_guard=0.0):
    """Inverse-probability-of-entry weighted estimator.

    ``theta = sum_i w_i nu(X_i) / sum_i w_i`` with ``w_i = 1/G(X_i|Z_i)``
    (censoring regimes add the matching inverse censoring survival and
    restrict to events).  The model SE is the sandwich treating the weights
    as known.
    """
    inner, w1, w2, sx = _censoring_factors(ds, Sc_hat, SD_hat)
    w1 = np.ones(ds.n) if w1 is None else w1
    sx = np.ones(ds.n) if sx is None else sx
    Gx = G_hat.cdf_diag(ds.x, ds.z)
    _check_floor("entry model at own event time", Gx, eps_guard, w1 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        wt = np.where(w1 > 0, w1 * sx / Gx, 0.0)
    w = ds.weight
    denom = float((w * wt).sum())
    if denom <= 0:
        raise DegenerateDenominator("no usable weight mass")
    theta = float((w * wt * nu.nu(ds.x)).sum()) / denom
    beta = float(w.sum()) / denom
    U = wt * (nu.nu(ds.x) - theta)
    sigma2 = beta ** 2 * float((w * U * U).sum()) / w.sum()
    n_eff = w.sum() ** 2 / float((w * w).sum())
    return EstimateReport(
        estimator_id="ipw", theta_hat=theta, beta_hat=beta,
        se_model=float(np.sqrt(sigma2 / n_eff)), n=ds.n, functional=nu.label(),
    )


def _reg_measures(ds, F_hat, nu, Sc_hat):
    inner = None
    if ds.censoring == "c1":
        if Sc_hat is None:
            raise WrongCensoringTag("tag 'c1' needs a censoring survival estimate")
        inner = lambda t: np.asarray(Sc_hat(t), dtype=float)  # noqa: E731
    em = _EventModel(F_hat, ds.z, nu, scale=inner)
    return em


def estimate_reg_t1(ds, F_hat, nu, Sc_hat=None, SD_hat=None, eps_guard=0.0):
    """Outcome-regression estimator built from the event model at the
    subject's own entry time.

    Each subject contributes the conditional-mean reconstruction
    ``nu(X){1 - F(Q|Z)} + m(Q,Z)`` over the selection weight ``1 - F(Q|Z)``;
    censoring regimes add the matching inverse censoring survivals.
    """
    em = _reg_measures(ds, F_hat, nu, Sc_hat)
    FQ = em.F_diag(ds.q)
    delta = np.asarray(ds.delta, dtype=float)
    if ds.censoring == "none":
        w1 = np.ones(ds.n)
        sxv = np.ones(ds.n)
    elif ds.censoring == "c1":
        scx = np.asarray(Sc_hat(ds.x), dtype=float)
        if np.any((delta == 1) & (scx <= 0)):
            raise CensoringPositivityViolation("censoring survival vanishes")
        w1 = delta
        with np.errstate(divide="ignore"):
            sxv = np.where(scx > 0, 1.0 / scx, 0.0)
    else:
        if SD_hat is None:
            raise WrongCensoringTag("tag 'c2' needs a residual-censoring survival estimate")
        sd = np.asarray(SD_hat(ds.x - ds.q), dtype=float)
        if np.any((delta == 1) & (sd <= 0)):
            raise CensoringPositivityViolation("residual censoring survival vanishes")
        with np.errstate(divide="ignore", invalid="ignore"):
            w1 = np.where((sd > 0) & (delta == 1), delta / np.where(sd > 0, sd, 1.0), 0.0)
        sxv = np.ones(ds.n)
    active = w1 > 0
    _check_floor("event survival at own entry time", 1.0 - FQ, eps_guard, active)
    with np.errstate(divide="ignore", invalid="ignore"):
        one_mFQ = np.where(active, 1.0 - FQ, 1.0)
        num_i = np.where(active, w1 * (nu.nu(ds.x) * sxv + em.m_diag(ds.q) / one_mFQ), 0.0)
        den_i = np.where(active, w1 * (sxv + em.r_diag(ds.q) / one_mFQ), 0.0)
    if np.any(active & ~(np.isfinite(num_i) & np.isfinite(den_i))):
        raise CensoringPositivityViolation(
            "unbounded censoring weights in the regression estimator"
        )
    w = ds.weight
    denom = float((w * den_i).sum())
    if denom <= 0:
        raise DegenerateDenominator("no usable weight mass")
    theta = float((w * num_i).sum()) / denom
    beta = float(w.sum()) / denom if ds.censoring == "none" else None
    return EstimateReport(
        estimator_id="reg1", theta_hat=theta, beta_hat=beta, se_model=None,
        n=ds.n, functional=nu.label(),
    )


def estimate_reg_t2(ds, F_hat, nu, Sc_hat=None, SD_hat=None, eps_guard=0.0):
    """Outcome-regression estimator using the event-model mean
    ``mu(Z) = m(infinity, Z)`` in place of the entry-time reconstruction."""
    em = _reg_measures(ds, F_hat, nu, Sc_hat)
    FQ = em.F_diag(ds.q)
    delta = np.asarray(ds.delta, dtype=float)
    if ds.censoring == "none":
        w1 = np.ones(ds.n)
    elif ds.censoring == "c1":
        w1 = delta
    else:
        if SD_hat is None:
            raise WrongCensoringTag("tag 'c2' needs a residual-censoring survival estimate")
        sd = np.asarray(SD_hat(ds.x - ds.q), dtype=float)
        if np.any((delta == 1) & (sd <= 0)):
            raise CensoringPositivityViolation("residual censoring survival vanishes")
        with np.errstate(divide="ignore", invalid="ignore"):
            w1 = np.where((sd > 0) & (delta == 1), delta / np.where(sd > 0, sd, 1.0), 0.0)
    active = w1 > 0
    _check_floor("event survival at own entry time", 1.0 - FQ, eps_guard, active)
    with np.errstate(divide="ignore", invalid="ignore"):
        one_mFQ = np.where(active, 1.0 - FQ, 1.0)
        num_i = np.where(active, w1 * em.mu() / one_mFQ, 0.0)
        den_i = np.where(active, w1 * em.r_diag(np.full(ds.n, np.inf)) / one_mFQ, 0.0) \
            if ds.censoring == "c1" else np.where(active, w1 / one_mFQ, 0.0)
    if np.any(active & ~(np.isfinite(num_i) & np.isfinite(den_i))):
        raise CensoringPositivityViolation(
            "the censoring-scaled event measure is unbounded"
        )
    w = ds.weight
    denom = float((w * den_i).sum())
    if denom <= 0:
        raise DegenerateDenominator("no usable weight mass")
    theta = float((w * num_i).sum()) / denom
    beta = float(w.sum()) / denom if ds.censoring == "none" else None
    return EstimateReport(
        estimator_id="reg2", theta_hat=theta, beta_hat=beta, se_model=None,
        n=ds.n, functional=nu.label(),
    )


def estimate_cf(ds, fit_fold_nuisances, K, seed, nu):
    """Cross-fitted doubly robust estimator.

    The data are split into ``K`` seeded folds; ``fit_fold_nuisances`` maps
    the out-of-fold dataset to a nuisance set, which is then evaluated only
    on the held-out fold.  The pooled estimating equation is solved in
    closed form exactly as in :func:`estimate_dr`, and the variance combines
    the fold-specific contributions.
    """
    folds = split_folds(ds.n, K, seed)
    a = np.empty(ds.n)
    b = np.empty(ds.n)
    ipw_term = np.empty(ds.n)
    fold_info = []
    for k in range(1, K + 1):
        train = ds.subset(folds.complement(k))
        ns = fit_fold_nuisances(train)
        hold = folds.indices(k)
        sub = ds.subset(hold)
        inner, w1, w2, sx = _censoring_factors(sub, ns.Sc_hat, ns.SD_hat)
        ak, bk, ik = _components(
            sub, ns.F_hat, ns.G_hat, nu, inner, w1, w2, sx, ns.eps_guard
        )
        a[hold], b[hold], ipw_term[hold] = ak, bk, ik
        fold_info.append({"fold": k, "n_train": train.n, "n_eval": sub.n})
    rep = _finalize(ds, a, b, ipw_term, "cf", nu,
                    diagnostics={"K": K, "seed": seed, "folds": fold_info})
    return rep


# ---------------------------------------------------------------------------
# influence values and oracle checks


def eic_value(obs, theta, F, G, beta, nu, eps_guard=0.0):
    """Efficient-influence value for one observation at the given law.

    ``beta`` is the selection probability pr*(Q < T); the value is ``beta``
    times the estimating function at ``theta``.
    """
    aug = augmentation_integral(obs, F, G, nu, theta=theta, role="dr_numerator",
                                eps_guard=eps_guard)
    Gx = float(np.asarray(G.cdf_diag(np.array([obs.x]),
                                     np.asarray(obs.z).reshape(1, -1)))[0])
    if Gx <= eps_guard:
        raise OverlapViolation(at=obs.x, value=Gx, what="entry model at event time")
    u = (float(nu.nu(obs.x)) - theta) / Gx + aug
    return beta * u


def solve_theta_bisect(ds, F, G, nu, lo=-10.0, hi=10.0, tol=1e-14,
                       inner_scale=None, w1=None, w2=None, sx=None, eps_guard=0.0):
    """Root of the pooled estimating equation by bisection.

    The equation is affine in theta, so this must agree with the closed-form
    solution; exposed for verification.
    """
    a, b, _ = _components(ds, F, G, nu, inner_scale, w1, w2, sx, eps_guard)
    w = ds.weight

    def h(theta):
        return float((w * (a - theta * b)).sum())

    flo, fhi = h(lo), h(hi)
    if flo * fhi > 0:
        raise ValueError("bisection bracket does not contain the root")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = h(mid)
        if flo * fm <= 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def identification_check(ds, G_true, nu, Sc_true=None, SD_true=None):
    """Sample analog of the weighting identity with the *true* entry model.

    Returns ``(value, mc_se)``: the ratio ``E{nu(X)/G}/E{1/G}`` (with true
    censoring survivals folded in under the censoring regimes) and its
    delta-method Monte Carlo standard error.
    """
    delta = np.asarray(ds.delta, dtype=float)
    Gx = np.asarray(G_true.cdf_diag(ds.x, ds.z), dtype=float)
    if ds.censoring == "none":
        wt = 1.0 / Gx
    elif ds.censoring == "c1":
        sc = np.asarray(Sc_true(ds.x), dtype=float)
        wt = np.where(delta == 1, delta / (np.where(delta == 1, sc, 1.0) * Gx), 0.0)
    elif ds.censoring == "c2":
        sd = np.asarray(SD_true(ds.x - ds.q), dtype=float)
        wt = np.where(delta == 1, delta / (np.where(delta == 1, sd, 1.0) * Gx), 0.0)
    else:
        raise WrongCensoringTag(ds.censoring)
    value = float((wt * nu.nu(ds.x)).sum() / wt.sum())
    infl = wt * (nu.nu(ds.x) - value) / wt.mean()
    mc_se = float(infl.std(ddof=1) / np.sqrt(ds.n))
    return value, mc_se


__all__ = [
    "EstimateReport",
    "augmentation_integral",
    "estimating_function_values",
    "estimate_dr",
    "estimate_dr_c1",
    "estimate_dr_c2",
    "estimate_ipw_q",
    "estimate_reg_t1",
    "estimate_reg_t2",
    "estimate_cf",
    "eic_value",
    "identification_check",
    "solve_theta_bisect",
]
