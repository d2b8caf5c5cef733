"""Nonparametric survival estimators.

The workhorse is the truncation-adjusted product-limit (Lynden-Bell)
estimator with risk sets ``{j : q_j <= s <= x_j}``; the Kaplan-Meier
estimator is its ``q = 0`` special case and shares the code path exactly.
A covariate-stratified product-limit learner provides the flexible nuisance
slot: within each covariate stratum the marginal estimator is applied, and
strata with too few events are merged with their nearest neighbor.
"""

from dataclasses import dataclass, field

import numpy as np

from .condcdf import StepCdf
from .errors import StratumTooSmall
from .stepfun import StepFunction


@dataclass
class ProductLimitResult:
    """Survival curve plus fit diagnostics.

    ``empty_risk_set_at`` is set when the risk set is exhausted at an event
    time before the last one: the curve drops to zero there and the
    remaining probability mass is left unassigned.  This is a diagnostic,
    not an error; small resamples trigger it routinely.
    """

    curve: StepFunction
    n_events: float
    empty_risk_set_at: float | None = None
    flags: list = field(default_factory=list)

    def __call__(self, t):
        return self.curve(t)


def product_limit_lt(q, x, delta=None, weights=None):
    """Truncation-adjusted product-limit survival estimator.

    Parameters
    ----------
    q, x : array_like
        Entry and observed times, ``q < x`` rowwise.
    delta : array_like, optional
        Event indicators; default all events.
    weights : array_like, optional
        Nonnegative case weights; scaling all weights by a positive constant
        leaves the curve unchanged.

    Returns
    -------
    ProductLimitResult
        ``curve(t) = prod_{event s <= t} (1 - d(s)/R(s))`` with weighted
        event mass ``d`` and risk count ``R``.
    """
    q = np.asarray(q, dtype=float)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    delta = np.ones(n) if delta is None else np.asarray(delta, dtype=float)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if np.any(q >= x):
        raise ValueError("product_limit_lt requires q < x for every row")

    events = (delta == 1) & (w > 0)
    if not np.any(events):
        return ProductLimitResult(
            curve=StepFunction(np.empty(0), np.empty(0), 1.0),
            n_events=0.0, flags=["no_events"],
        )
    et, inv = np.unique(x[events], return_inverse=True)
    d = np.bincount(inv, weights=w[events], minlength=et.size)
    keep = d > 0
    et, d = et[keep], d[keep]
    # risk count R(s) = sum w 1(q <= s <= x) via sorted prefix sums
    alive = w > 0
    qa, xa, wa = q[alive], x[alive], w[alive]
    oq, ox = np.argsort(qa, kind="stable"), np.argsort(xa, kind="stable")
    wq = np.concatenate(([0.0], np.cumsum(wa[oq])))
    wx = np.concatenate(([0.0], np.cumsum(wa[ox])))
    R = wq[np.searchsorted(qa[oq], et, side="right")] \
        - wx[np.searchsorted(xa[ox], et, side="left")]

    frac = np.clip(1.0 - d / R, 0.0, 1.0)
    surv = np.cumprod(frac)
    empty_at = None
    dead = np.flatnonzero(frac <= 0.0)
    if dead.size and dead[0] < et.size - 1:
        empty_at = float(et[dead[0]])
    res = ProductLimitResult(
        curve=StepFunction(et, surv, 1.0), n_events=float(d.sum()),
        empty_risk_set_at=empty_at,
    )
    if empty_at is not None:
        res.flags.append("empty_risk_set")
    return res


def kaplan_meier(x, delta=None, weights=None):
    """Kaplan-Meier estimator: the product-limit estimator with all entry
    times at zero (shares its code path exactly)."""
    x = np.asarray(x, dtype=float)
    return product_limit_lt(np.zeros_like(x), x, delta, weights)


def fit_Sc(ds):
    """Survival function of the censoring time under tag ``c1``.

    The censoring time is left truncated by the entry time and right
    censored by the event time, so the product-limit estimator is applied to
    ``(q, x)`` with the flipped indicator ``1 - delta`` as the event.
    """
    if ds.censoring != "c1":
        from .errors import WrongCensoringTag

        raise WrongCensoringTag("fit_Sc requires censoring tag 'c1'")
    return product_limit_lt(ds.q, ds.x, 1 - np.asarray(ds.delta), ds.weight).curve


def fit_SD(view):
    """Kaplan-Meier survival of the residual censoring time from a
    residual-time view ``(x - q, 1 - delta)``."""
    return kaplan_meier(view.time, view.event, view.weight).curve


# ---------------------------------------------------------------------------
# covariate-stratified product-limit learner


def quantile_cuts(z, bins):
    """Interior quantile cut points per covariate column (duplicates dropped)."""
    cuts = []
    for j in range(z.shape[1]):
        if bins <= 1:
            cuts.append(np.empty(0))
            continue
        qs = np.quantile(z[:, j], np.arange(1, bins) / bins)
        cuts.append(np.unique(qs))
    return cuts


class StrataRule:
    """Maps covariate vectors to stratum labels via per-covariate cut points,
    with an optional merge map collapsing sparse strata."""

    def __init__(self, cuts, merge_map=None, n_raw=None):
        self.cuts = [np.asarray(c, dtype=float) for c in cuts]
        self.radix = np.array([c.size + 1 for c in self.cuts], dtype=int)
        self.n_raw = int(np.prod(self.radix)) if n_raw is None else n_raw
        self.merge_map = (
            np.arange(self.n_raw) if merge_map is None else np.asarray(merge_map, dtype=int)
        )
        self.n_strata = int(self.merge_map.max()) + 1 if self.n_raw else 1

    def raw_index(self, Z):
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z.reshape(1, -1)
        if not self.cuts:
            return np.zeros(Z.shape[0], dtype=int)
        idx = np.zeros(Z.shape[0], dtype=int)
        for j, c in enumerate(self.cuts):
            idx = idx * self.radix[j] + np.searchsorted(c, Z[:, j], side="right")
        return idx

    def bin_tuple(self, raw):
        out = []
        for r in self.radix[::-1]:
            out.append(raw % r)
            raw = raw // r
        return np.array(out[::-1])

    def __call__(self, Z):
        return self.merge_map[self.raw_index(Z)]


def _merge_sparse(rule, raw_idx, event_mask, w, min_events):
    """Collapse strata until each group holds at least ``min_events`` events;
    the sparsest group merges with its nearest neighbor in bin space."""
    n_raw = rule.n_raw
    groups = [[k] for k in range(n_raw)]
    ev = np.array([
        w[(raw_idx == k) & event_mask].sum() for k in range(n_raw)
    ])
    alive = list(range(n_raw))

    def centroid(g):
        return np.mean([rule.bin_tuple(k) for k in groups[g]], axis=0)

    while len(alive) > 1:
        gev = np.array([ev[g] for g in alive])
        worst_pos = int(np.argmin(gev))
        if gev[worst_pos] >= min_events:
            break
        g = alive[worst_pos]
        others = [h for h in alive if h != g]
        dists = [np.abs(centroid(g) - centroid(h)).sum() for h in others]
        mate = others[int(np.argmin(dists))]
        groups[mate].extend(groups[g])
        ev[mate] += ev[g]
        alive.remove(g)
    merge_map = np.empty(n_raw, dtype=int)
    for new, g in enumerate(alive):
        for k in groups[g]:
            merge_map[k] = new
    return StrataRule(rule.cuts, merge_map=merge_map, n_raw=n_raw)


def stratified_conditional_pl(ds, bins=3, cuts=None, min_events=5):
    """Conditional CDF learner: product-limit fits within covariate strata.

    Parameters
    ----------
    ds : Dataset
    bins : int
        Quantile bins per covariate (default terciles).  Sparse strata are
        merged with their nearest neighbor until every stratum carries at
        least ``min_events`` events.
    cuts : list of array_like, optional
        Explicit cut points per covariate.  In this mode nothing is merged;
        a sparse stratum raises :class:`StratumTooSmall`.
    min_events : int

    Returns
    -------
    StepCdf
        ``F(t|z) = 1 - S_stratum(z)(t)``; supports case weights through the
        dataset, as required when the entry-time model is fit with
        censoring-compensating weights.
    """
    z, w = ds.z, ds.weight
    event_mask = np.asarray(ds.delta) == 1
    explicit = cuts is not None
    rule = StrataRule(cuts if explicit else quantile_cuts(z, bins) if ds.d else [])
    raw_idx = rule.raw_index(z)
    if explicit:
        for k in range(rule.n_raw):
            n_ev = w[(raw_idx == k) & event_mask].sum()
            if n_ev < min_events:
                raise StratumTooSmall(k, float(n_ev), min_events)
    else:
        rule = _merge_sparse(rule, raw_idx, event_mask, w, min_events)
        total = w[event_mask].sum()
        if rule.n_strata == 1 and total < min_events:
            raise StratumTooSmall(0, float(total), min_events)
    labels = rule(z)
    curves = []
    for g in range(rule.n_strata):
        rows = labels == g
        fit = product_limit_lt(ds.q[rows], ds.x[rows], ds.delta[rows], w[rows])
        s = fit.curve
        curves.append(StepFunction(s.times, 1.0 - s.values, 0.0))
    return StepCdf(curves, rule, kind="stratified_pl")
