"""Synthetic data generators, truth oracles, and the replication harness.

Scenario catalog
----------------
Scenarios "1" through "7" share ``tau = 20``, an event-time support starting
at ``tau1 = 5`` and an entry-time support ending at ``tau2 = 8``.  With
``lp = 0.3 Z1 + 0.5 Z2`` and the enriched predictor
``lp2 = lp + 0.6 (Z1^2 - 1/3) + 0.5 Z1 Z2``:

=========  ==============================  ==============================
scenario   event time T                    entry time Q
=========  ==============================  ==============================
1          hazard-model, lp                hazard-model, lp
2          hazard-model, lp                hazard-model, lp2
3          hazard-model, lp                mixture: hazard lp2 / AFT lp2
4          hazard-model, lp2               hazard-model, lp
5          mixture: AFT lp2 / hazard lp2   hazard-model, lp
6          hazard-model, lp2               hazard-model, lp2
7          mixture (as 5)                  mixture (as 3)
=========  ==============================  ==============================

"hazard-model" means ``(T - tau1)`` (resp. ``(tau2 - Q)``) is Weibull with
shape 2 and scale ``exp((1 - predictor)/2)``.  The event-time AFT branch is
``log(T - tau1) = -1 + lp2 + N(0,1)`` where ``lp < 0``; the entry-time AFT
branch is ``log(tau2 - Q) = -1 + lp2 + eps`` with centered Weibull(1.5, 1)
noise where ``lp >= 0``.

Scenario "wu" (the cross-fitting benchmark, also the base of both censoring
scenarios) takes ``tau1 = 1``, ``tau2 = 4.5``: ``(T - 1)`` is Weibull with
shape 2 and scale ``exp((2 - lp)/2)``, and ``(tau2 - Q)`` follows the
proportional hazards model whose baseline is the Uniform(0, tau2) hazard,
giving ``Q = tau2 * u^{exp(-lp)}`` for a uniform draw ``u``.

Scenario "c1" (censoring may precede entry) keeps Q from "wu", draws
``(T-1)`` Weibull with shape 2 and scale ``{exp(-2+lp) - 7^{-2}}^{-1/2}``
and an independent censoring time with ``(C-1)`` Weibull(2, 7); subjects
with ``Q < min(T, C)`` are observed.  The observable time then follows the
"wu" event law exactly (the hazards add).  Scenario "c2" (censoring after
entry) keeps "wu" data and censors at ``Q + D`` with residual censoring
``D`` Weibull(2, 4) applied after the ``Q < T`` selection.

Each subject consumes a fixed quintuple of uniforms (Z1, Z2, event branch,
entry branch, censoring branch) from a counter-based stream, so every
replicate is reproducible across platforms regardless of batch sizes.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from ._rng import rng_for
from .condcdf import AnalyticCdf
from .data import Dataset
from .errors import EstimationError, UnknownScenario
from .estimators import Z195
from .inference import bootstrap
from .pipeline import run_estimator

GAMMA_5_3 = 0.902745292950934  # gamma(5/3): mean of Weibull(1.5, 1)

SCENARIO_IDS = ("1", "2", "3", "4", "5", "6", "7", "wu", "c1", "c2")


def _lp(z1, z2):
    return 0.3 * z1 + 0.5 * z2


def _lp2(z1, z2):
    return _lp(z1, z2) + 0.6 * (z1 ** 2 - 1.0 / 3.0) + 0.5 * z1 * z2


def _weib2(scale, u):
    # shape-2 Weibull via the survival draw u
    return scale * np.sqrt(-np.log(u))


def _draw_block(scenario, u, c1_cens_scale=7.0):
    """Transform a (batch, 5) uniform block into one full-data block."""
    z1 = 2.0 * u[:, 0] - 1.0
    z2 = np.where(u[:, 1] < 0.5, 0.5, -0.5)
    lp, lp2 = _lp(z1, z2), _lp2(z1, z2)
    uT, uQ, uC = u[:, 2], u[:, 3], u[:, 4]
    z = np.column_stack((z1, z2))
    C = None

    if scenario in ("1", "2", "3"):
        T = 5.0 + _weib2(np.exp((1.0 - lp) / 2.0), uT)
    elif scenario in ("4", "6"):
        T = 5.0 + _weib2(np.exp((1.0 - lp2) / 2.0), uT)
    elif scenario in ("5", "7"):
        T = np.where(
            lp < 0,
            5.0 + np.exp(-1.0 + lp2 + ndtri(uT)),
            5.0 + _weib2(np.exp((1.0 - lp2) / 2.0), uT),
        )
    elif scenario in ("wu", "c2"):
        T = 1.0 + _weib2(np.exp((2.0 - lp) / 2.0), uT)
    elif scenario == "c1":
        scale = (np.exp(-2.0 + lp) - c1_cens_scale ** -2.0) ** -0.5 \
            if np.isfinite(c1_cens_scale) else np.exp((2.0 - lp) / 2.0)
        T = 1.0 + _weib2(scale, uT)
        C = 1.0 + _weib2(c1_cens_scale, uC) if np.isfinite(c1_cens_scale) \
            else np.full(T.shape, np.inf)
    else:
        raise UnknownScenario(scenario)

    if scenario in ("1", "4", "5"):
        Q = 8.0 - _weib2(np.exp((1.0 - lp) / 2.0), uQ)
    elif scenario in ("2", "6"):
        Q = 8.0 - _weib2(np.exp((1.0 - lp2) / 2.0), uQ)
    elif scenario in ("3", "7"):
        eps2 = (-np.log(uQ)) ** (2.0 / 3.0) - GAMMA_5_3
        Q = np.where(
            lp < 0,
            8.0 - _weib2(np.exp((1.0 - lp2) / 2.0), uQ),
            8.0 - np.exp(-1.0 + lp2 + eps2),
        )
    else:  # wu, c1, c2
        Q = 4.5 * uQ ** np.exp(-lp)
    # the entry-time laws place a vanishing sliver of mass below zero
    Q = np.maximum(Q, 0.0)

    D = 4.0 * np.sqrt(-np.log(uC)) if scenario == "c2" else None
    return z, Q, T, C, D


@dataclass(frozen=True)
class FullSample:
    """Full-data draws before truncation (event times are always known)."""

    q: np.ndarray
    t: np.ndarray
    z: np.ndarray

    @property
    def n(self):
        return self.q.shape[0]


@dataclass(frozen=True)
class SimulatedData:
    full: FullSample
    observed: Dataset
    truncation_rate: float
    censoring_rate: float | None = None


def generate_scenario(scenario, n, seed, replicate=0, c1_cens_scale=7.0):
    """Simulate until ``n`` observed subjects have accumulated.

    Returns the observed dataset, the full sample that produced it (cut at
    the draw that completed the ``n``-th observed row), and the realized
    truncation and censoring rates.
    """
    scenario = str(scenario)
    if scenario not in SCENARIO_IDS:
        raise UnknownScenario(scenario)
    rng = rng_for(seed, 17, replicate)
    blocks = []
    n_obs = 0
    batch = max(2048, int(2.5 * n))
    while n_obs < n:
        u = rng.random((batch, 5))
        z, Q, T, C, D = _draw_block(scenario, u, c1_cens_scale)
        if scenario == "c1":
            X = np.minimum(T, C)
            delta = (T < C).astype(float)
            keep = Q < X
        elif scenario == "c2":
            X = np.minimum(T, Q + D)
            delta = (T < Q + D).astype(float)
            keep = Q < T
        else:
            X = T
            delta = np.ones(T.shape)
            keep = Q < T
        blocks.append((z, Q, T, X, delta, keep))
        n_obs += int(keep.sum())

    z = np.concatenate([b[0] for b in blocks])
    Q = np.concatenate([b[1] for b in blocks])
    T = np.concatenate([b[2] for b in blocks])
    X = np.concatenate([b[3] for b in blocks])
    delta = np.concatenate([b[4] for b in blocks])
    keep = np.concatenate([b[5] for b in blocks])
    stop = int(np.flatnonzero(keep)[n - 1]) + 1
    z, Q, T, X, delta, keep = (a[:stop] for a in (z, Q, T, X, delta, keep))

    tag = scenario if scenario in ("c1", "c2") else "none"
    observed = Dataset.from_arrays(
        Q[keep], X[keep], delta[keep], z[keep],
        censoring=tag, label=f"scenario {scenario} seed {seed}.{replicate}",
    )
    cens_rate = None
    if tag != "none":
        cens_rate = float(1.0 - observed.delta.mean())
    return SimulatedData(
        full=FullSample(q=Q, t=T, z=z),
        observed=observed,
        truncation_rate=1.0 - keep.mean(),
        censoring_rate=cens_rate,
    )


def generate_censoring_scenario(which, n, seed, replicate=0, c1_cens_scale=7.0):
    """Observed dataset under one of the two censoring regimes."""
    if which not in ("c1", "c2"):
        raise UnknownScenario(which)
    return generate_scenario(which, n, seed, replicate, c1_cens_scale)


def truth_monte_carlo(scenario, nu, N, seed=123):
    """Full-data Monte Carlo estimate of the estimand with its standard error."""
    if N < 10_000:
        raise ValueError("use at least 1e4 draws for the truth oracle")
    rng = rng_for(seed, 29)
    total = 0.0
    total2 = 0.0
    left = N
    while left > 0:
        m = min(left, 2_000_000)
        u = rng.random((m, 5))
        _, _, T, _, _ = _draw_block(scenario, u)
        v = nu.nu(T)
        total += float(v.sum())
        total2 += float((v * v).sum())
        left -= m
    mean = total / N
    var = max(total2 / N - mean ** 2, 0.0)
    return mean, float(np.sqrt(var / N))


def conditional_survival_at(scenario, t0, z1, z2):
    """Closed-form pr(T > t0 | Z) for every scenario's event law."""
    lp, lp2 = _lp(z1, z2), _lp2(z1, z2)
    if scenario in ("1", "2", "3"):
        return np.exp(-np.maximum(t0 - 5.0, 0.0) ** 2 * np.exp(lp - 1.0))
    if scenario in ("4", "6"):
        return np.exp(-np.maximum(t0 - 5.0, 0.0) ** 2 * np.exp(lp2 - 1.0))
    if scenario in ("5", "7"):
        from scipy.special import ndtr

        cox = np.exp(-np.maximum(t0 - 5.0, 0.0) ** 2 * np.exp(lp2 - 1.0))
        aft = 1.0 - ndtr(np.log(max(t0 - 5.0, 1e-300)) + 1.0 - lp2) \
            if t0 > 5.0 else np.ones_like(lp2)
        return np.where(lp < 0, aft, cox)
    if scenario in ("wu", "c2"):
        return np.exp(-np.maximum(t0 - 1.0, 0.0) ** 2 * np.exp(lp - 2.0))
    if scenario == "c1":
        rate = np.exp(lp - 2.0) - 7.0 ** -2.0
        return np.exp(-np.maximum(t0 - 1.0, 0.0) ** 2 * rate)
    raise UnknownScenario(scenario)


def truth_exact(scenario, t0, order=128):
    """Quadrature value of pr*(T > t0): exact up to 1-d Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for z2 in (-0.5, 0.5):
        total += 0.5 * float(
            (w * conditional_survival_at(scenario, t0, x, np.full(x.shape, z2))).sum()
        ) / 2.0
    return total


# ---------------------------------------------------------------------------
# analytic truth surfaces (oracles for identification and property checks)


def true_event_cdf(scenario):
    """The event-time conditional CDF as an analytic surface.

    For scenario "c1" this is the law of the *observable* time (the two
    shape-2 hazards add), which is what the censored-data event model
    targets.
    """
    if scenario == "1":
        def cdf(t, Z):
            lp = _lp(Z[:, 0], Z[:, 1])[..., None] if np.ndim(t) == 2 else _lp(Z[:, 0], Z[:, 1])
            return 1.0 - np.exp(-np.maximum(t - 5.0, 0.0) ** 2 * np.exp(lp - 1.0))

        def pdf(t, Z):
            lp = _lp(Z[:, 0], Z[:, 1])[..., None] if np.ndim(t) == 2 else _lp(Z[:, 0], Z[:, 1])
            u = np.maximum(t - 5.0, 0.0)
            return 2.0 * u * np.exp(lp - 1.0) * np.exp(-u ** 2 * np.exp(lp - 1.0))

        return AnalyticCdf(cdf, pdf, breakpoints=(5.0,), d=2)
    if scenario in ("wu", "c1", "c2"):
        def cdf(t, Z):
            lp = _lp(Z[:, 0], Z[:, 1])[..., None] if np.ndim(t) == 2 else _lp(Z[:, 0], Z[:, 1])
            return 1.0 - np.exp(-np.maximum(t - 1.0, 0.0) ** 2 * np.exp(lp - 2.0))

        def pdf(t, Z):
            lp = _lp(Z[:, 0], Z[:, 1])[..., None] if np.ndim(t) == 2 else _lp(Z[:, 0], Z[:, 1])
            u = np.maximum(t - 1.0, 0.0)
            return 2.0 * u * np.exp(lp - 2.0) * np.exp(-u ** 2 * np.exp(lp - 2.0))

        return AnalyticCdf(cdf, pdf, breakpoints=(1.0,), d=2)
    raise UnknownScenario(scenario)


def true_entry_cdf(scenario):
    """The entry-time conditional CDF as an analytic surface."""
    if scenario == "1":
        def cdf(q, Z):
            lp = _lp(Z[:, 0], Z[:, 1])[..., None] if np.ndim(q) == 2 else _lp(Z[:, 0], Z[:, 1])
            return np.exp(-np.maximum(8.0 - q, 0.0) ** 2 * np.exp(lp - 1.0))

        def pdf(q, Z):
            lp = _lp(Z[:, 0], Z[:, 1])[..., None] if np.ndim(q) == 2 else _lp(Z[:, 0], Z[:, 1])
            u = np.maximum(8.0 - q, 0.0)
            return 2.0 * u * np.exp(lp - 1.0) * np.exp(-u ** 2 * np.exp(lp - 1.0))

        return AnalyticCdf(cdf, pdf, breakpoints=(8.0,), d=2)
    if scenario in ("wu", "c1", "c2"):
        def cdf(q, Z):
            lp = _lp(Z[:, 0], Z[:, 1])
            a = np.exp(lp)[..., None] if np.ndim(q) == 2 else np.exp(lp)
            return np.clip(q / 4.5, 0.0, 1.0) ** a

        def pdf(q, Z):
            lp = _lp(Z[:, 0], Z[:, 1])
            a = np.exp(lp)[..., None] if np.ndim(q) == 2 else np.exp(lp)
            inside = (q > 0.0) & (q < 4.5)
            base = np.clip(q / 4.5, 1e-300, 1.0)
            return np.where(inside, a / 4.5 * base ** (a - 1.0), 0.0)

        return AnalyticCdf(cdf, pdf, breakpoints=(0.0, 4.5), d=2)
    raise UnknownScenario(scenario)


def true_censoring_survival(scenario):
    """Marginal censoring survival: of C for "c1", of the residual D for "c2"."""
    if scenario == "c1":
        return lambda t: np.exp(-(np.maximum(np.asarray(t, dtype=float) - 1.0, 0.0) / 7.0) ** 2)
    if scenario == "c2":
        return lambda t: np.exp(-(np.maximum(np.asarray(t, dtype=float), 0.0) / 4.0) ** 2)
    raise UnknownScenario(scenario)


# ---------------------------------------------------------------------------
# replication harness


@dataclass(frozen=True)
class StudyEstimator:
    """One estimator entry of a study: a config plus whether to bootstrap it."""

    config: object
    boot: bool = False


@dataclass(frozen=True)
class StudyConfig:
    scenario: str
    estimators: tuple
    n: int = 1000
    R: int = 200
    B: int = 100
    seed: int = 0
    boot_method: str = "se_normal"
    theta0: float | None = None
    include_full: bool = False


@dataclass
class SimResultRow:
    estimator_id: str
    bias: float
    pct_bias: float
    sd: float
    se_model_mean: float | None
    se_boot_mean: float | None
    cp_model: float | None
    cp_boot: float | None
    n_replicates: int
    n_failed: int = 0
    theta0: float = float("nan")
    mean: float = float("nan")


def _study_theta0(study):
    if study.theta0 is not None:
        return study.theta0
    nus = {e.config.functional for e in study.estimators}
    nu = next(iter(nus))
    if len(nus) != 1 or nu.kind != "survival_indicator":
        raise ValueError("provide theta0 explicitly for mixed or non-indicator targets")
    return truth_exact(study.scenario, nu.t0)


def _run_replicate(study, r):
    sim = generate_scenario(study.scenario, study.n, study.seed, replicate=r)
    out = {}
    for j, ent in enumerate(study.estimators):
        cfg = ent.config
        try:
            if ent.boot and study.B > 0:
                rep, _ = bootstrap(sim.observed, cfg, B=study.B,
                                   seed=(study.seed * 1000003 + 101 * r + j),
                                   method=study.boot_method)
            else:
                rep = run_estimator(sim.observed, cfg)
            out[cfg.estimator_id] = (rep.theta_hat, rep.se_model, rep.se_boot)
        except EstimationError as exc:
            out[cfg.estimator_id] = ("failed", repr(exc), None)
    if study.include_full:
        nu = study.estimators[0].config.functional
        vals = nu.nu(sim.full.t)
        out["full"] = (float(vals.mean()),
                       float(vals.std(ddof=1) / np.sqrt(vals.size)), None)
    return out


def replicate_study(study, progress=None, threads=1):
    """Run the replication study and aggregate bias/SD/SE/coverage rows.

    Deterministic given the study seed regardless of ``threads``: replicates
    derive independent streams, so scheduling order is irrelevant.
    """
    theta0 = _study_theta0(study)
    ids = [e.config.estimator_id for e in study.estimators]
    if study.include_full:
        ids.append("full")
    acc = {i: {"theta": [], "sem": [], "seb": [], "fail": 0} for i in ids}
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(_run_replicate, [study] * study.R,
                                 range(study.R), chunksize=4))
    else:
        outs = None
    for r in range(study.R):
        rep_out = outs[r] if outs is not None else _run_replicate(study, r)
        for i in ids:
            th, sem, seb = rep_out[i]
            if th == "failed":
                acc[i]["fail"] += 1
                continue
            acc[i]["theta"].append(th)
            acc[i]["sem"].append(sem)
            acc[i]["seb"].append(seb)
        if progress is not None:
            progress(r + 1, study.R)
    rows = []
    for i in ids:
        th = np.asarray(acc[i]["theta"], dtype=float)
        sem = np.asarray([s for s in acc[i]["sem"] if s is not None], dtype=float)
        seb = np.asarray([s for s in acc[i]["seb"] if s is not None], dtype=float)
        haves = th.size
        bias = float(th.mean() - theta0) if haves else float("nan")
        covers_m = covers_b = None
        if sem.size == haves and haves:
            se_all = np.asarray(acc[i]["sem"], dtype=float)
            covers_m = float(np.mean(np.abs(th - theta0) <= Z195 * se_all))
        if seb.size == haves and haves:
            se_all = np.asarray(acc[i]["seb"], dtype=float)
            covers_b = float(np.mean(np.abs(th - theta0) <= Z195 * se_all))
        rows.append(SimResultRow(
            estimator_id=i, bias=bias,
            pct_bias=100.0 * bias / theta0 if theta0 else float("nan"),
            sd=float(th.std(ddof=1)) if haves > 1 else float("nan"),
            se_model_mean=float(sem.mean()) if sem.size else None,
            se_boot_mean=float(seb.mean()) if seb.size else None,
            cp_model=covers_m, cp_boot=covers_b,
            n_replicates=haves, n_failed=acc[i]["fail"],
            theta0=theta0, mean=float(th.mean()) if haves else float("nan"),
        ))
    return rows


def rows_to_csv(rows, target):
    """Write study rows as CSV (path or file-like)."""
    import csv

    close = False
    if hasattr(target, "write"):
        fh = target
    else:
        fh = open(target, "w", newline="")
        close = True
    try:
        writer = csv.writer(fh)
        writer.writerow([
            "estimator", "bias", "pct_bias", "sd", "se_model_mean",
            "se_boot_mean", "cp_model", "cp_boot", "n_replicates",
            "n_failed", "theta0", "mean",
        ])
        for r in rows:
            writer.writerow([
                r.estimator_id, f"{r.bias:.6f}", f"{r.pct_bias:.2f}",
                f"{r.sd:.6f}",
                "" if r.se_model_mean is None else f"{r.se_model_mean:.6f}",
                "" if r.se_boot_mean is None else f"{r.se_boot_mean:.6f}",
                "" if r.cp_model is None else f"{r.cp_model:.4f}",
                "" if r.cp_boot is None else f"{r.cp_boot:.4f}",
                r.n_replicates, r.n_failed, f"{r.theta0:.6f}", f"{r.mean:.6f}",
            ])
    finally:
        if close:
            fh.close()
