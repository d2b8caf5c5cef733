"""Command-line interface.

Subcommands
-----------
``estimate``   point estimate with SEs/CIs on a CSV dataset
``curve``      survival-style curve: repeated estimation over a time grid
``simulate``   replication study on the built-in scenario catalog
``diagnose``   dependence test and empirical overlap minima

Exit codes: 0 success, 2 input error, 3 estimation error, 4 positivity
(overlap) violation.  All randomness is seeded; identical invocations
produce byte-identical output.  Flags override config-file entries
(``--config``, flat ``key=value`` lines), which override defaults.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .data import load_dataset
from .errors import (
    CensoringPositivityViolation,
    InputError,
    OverlapViolation,
    TruncdrError,
)
from .functionals import rmst, survival_indicator, tabulated
from .inference import bootstrap
from .pipeline import EstimatorConfig, diagnostics_report, run_estimator
from .sim import StudyConfig, StudyEstimator, replicate_study, rows_to_csv

EXIT_INPUT, EXIT_ESTIMATION, EXIT_OVERLAP = 2, 3, 4

_LEARNER_CHOICES = ("cox", "cox_sq_int", "stratified_pl", "constant0", "constant1")


def _read_config(path):
    conf = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InputError(f"config line without '=': {line!r}")
            k, v = line.split("=", 1)
            conf[k.strip().replace("-", "_")] = v.strip()
    return conf


def _splice_config(argv):
    """Insert config-file entries as flags right after the subcommand, so
    explicit command-line flags (parsed later) win."""
    if "--config" not in argv:
        return argv
    path = argv[argv.index("--config") + 1]
    flags = []
    for k, v in _read_config(path).items():
        flags.extend([f"--{k.replace('_', '-')}", v])
    return [argv[0]] + flags + argv[1:]


def _functional_from(args):
    if args.functional == "survival":
        if args.t0 is None:
            raise InputError("--functional survival needs --t0")
        return survival_indicator(args.t0)
    if args.functional == "rmst":
        if args.t0 is None:
            raise InputError("--functional rmst needs --t0")
        return rmst(args.t0)
    if args.functional == "tabulated":
        if not args.nu_table:
            raise InputError("--functional tabulated needs --nu-table")
        times, values = [], []
        with open(args.nu_table) as fh:
            for row in csv.DictReader(fh):
                times.append(float(row["time"]))
                values.append(float(row["value"]))
        order = np.argsort(times)
        return tabulated(np.asarray(times)[order], np.asarray(values)[order])
    raise InputError(f"unknown functional {args.functional!r}")


def _learner_from(name):
    from .condcdf import degenerate
    from .learners import make_learner

    if name == "constant0":
        class _F0:
            clamp_eps = 0.0

            def fit_event(self, ds):
                return degenerate("F_zero")

        return _F0()
    if name == "constant1":
        class _G1:
            clamp_eps = 0.0

            def fit_entry(self, ds, tau=None):
                return degenerate("G_one")

        return _G1()
    return make_learner(name)


def _config_from(args):
    return EstimatorConfig(
        estimator=args.estimator,
        functional=_functional_from(args),
        f_learner=_learner_from(args.f_learner),
        g_learner=_learner_from(args.g_learner),
        K=args.k,
        cf_seed=args.seed,
        tau=args.tau,
    )


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dataset_from(args):
    schema = None
    if args.columns:
        schema = {}
        for pair in args.columns.split(","):
            canon, name = pair.split("=", 1)
            schema[canon.strip()] = name.strip()
    return load_dataset(args.data, schema=schema, censoring=args.censoring)


def cmd_estimate(args):
    ds = _dataset_from(args)
    config = _config_from(args)
    if args.boot > 0:
        rep, _ = bootstrap(ds, config, B=args.boot, seed=args.boot_seed,
                           method=args.boot_method)
    else:
        rep = run_estimator(ds, config)
    _emit(json.dumps(rep.to_dict(), sort_keys=True, indent=2) + "\n", args.out)
    return 0


def cmd_curve(args):
    ds = _dataset_from(args)
    grid = [float(t) for t in args.grid.split(",")]
    estimators = args.estimators.split(",")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["estimator", "t", "theta_hat", "se", "lo", "hi"])
    for est in estimators:
        for t in grid:
            targs = argparse.Namespace(**vars(args))
            targs.estimator = est
            targs.t0 = t
            config = _config_from(targs)
            if args.boot > 0:
                rep, _ = bootstrap(ds, config, B=args.boot, seed=args.boot_seed,
                                   method=args.boot_method)
                se, ci = rep.se_boot, rep.ci_boot
            else:
                rep = run_estimator(ds, config)
                se, ci = rep.se_model, rep.ci_model
            writer.writerow([
                est, f"{t:.12g}", f"{rep.theta_hat:.12g}",
                "" if se is None else f"{se:.12g}",
                "" if ci is None else f"{ci[0]:.12g}",
                "" if ci is None else f"{ci[1]:.12g}",
            ])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_simulate(args):
    names = args.estimators.split(",")
    if args.t0 is None and args.functional in ("survival", "rmst"):
        # benchmark horizons: 7 for the numbered scenarios, 3 otherwise
        args.t0 = 7.0 if args.scenario in tuple("1234567") else 3.0
    nu = _functional_from(args)
    entries = []
    include_full = False
    for name in names:
        if name == "full":
            include_full = True
            continue
        f_l, g_l = args.f_learner, args.g_learner
        cfg = EstimatorConfig(
            estimator=name, functional=nu,
            f_learner=_learner_from(f_l), g_learner=_learner_from(g_l),
            K=args.k, cf_seed=args.seed,
        )
        entries.append(StudyEstimator(config=cfg, boot=args.boot > 0))
    study = StudyConfig(
        scenario=args.scenario, estimators=tuple(entries), n=args.n,
        R=args.reps, B=args.boot, seed=args.seed,
        boot_method=args.boot_method, include_full=include_full,
        theta0=args.theta0,
    )
    progress = None
    if args.verbose:
        progress = lambda r, R: print(f"replicate {r}/{R}", file=sys.stderr)  # noqa: E731
    rows = replicate_study(study, progress=progress, threads=max(args.threads, 1))
    buf = io.StringIO()
    rows_to_csv(rows, buf)
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_diagnose(args):
    ds = _dataset_from(args)
    out = diagnostics_report(ds, tau=args.tau)
    _emit(json.dumps(out, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _add_common_data_flags(p):
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--censoring", choices=("none", "c1", "c2"), default="none")
    p.add_argument("--columns", default=None,
                   help="column mapping, e.g. q=entry,x=time,delta=event")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--out", default=None, help="output path (stdout if absent)")
    p.add_argument("--tau", type=float, default=None,
                   help="reversal horizon (default: max observed time + 1)")


def _add_estimator_flags(p, with_estimator=True):
    if with_estimator:
        p.add_argument("--estimator", default="dr",
                       choices=("dr", "cf", "ipw", "reg1", "reg2", "pl", "naive"))
    p.add_argument("--f-learner", default="cox", choices=_LEARNER_CHOICES)
    p.add_argument("--g-learner", default="cox", choices=_LEARNER_CHOICES)
    p.add_argument("--functional", default="survival",
                   choices=("survival", "rmst", "tabulated"))
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--nu-table", default=None)
    p.add_argument("--k", type=int, default=10, help="cross-fitting folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--boot", type=int, default=0, help="bootstrap replicates")
    p.add_argument("--boot-seed", type=int, default=0)
    p.add_argument("--boot-method", default="se_normal",
                   choices=("se_normal", "percentile"))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="truncdr",
        description="Doubly robust estimation under covariate-dependent left truncation",
    )
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("TRUNCDR_THREADS", "1")))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the target on a CSV dataset")
    _add_common_data_flags(p)
    _add_estimator_flags(p)

    p = sub.add_parser("curve", help="estimate over a grid of horizons")
    _add_common_data_flags(p)
    _add_estimator_flags(p, with_estimator=False)
    p.add_argument("--estimators", default="dr")
    p.add_argument("--grid", required=True, help="comma-separated horizons")

    p = sub.add_parser("simulate", help="replication study on a built-in scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--estimators", default="dr,ipw,reg1,reg2,pl,naive,full")
    p.add_argument("--theta0", type=float, default=None)
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    _add_estimator_flags(p, with_estimator=False)

    p = sub.add_parser("diagnose", help="dependence test and overlap diagnostics")
    _add_common_data_flags(p)

    return parser


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        argv = _splice_config(argv)
    except (OSError, IndexError, InputError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    args = parser.parse_args(argv)
    try:
        if args.command == "estimate":
            return cmd_estimate(args)
        if args.command == "curve":
            return cmd_curve(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "diagnose":
            return cmd_diagnose(args)
        parser.error(f"unknown command {args.command}")
    except (OverlapViolation, CensoringPositivityViolation) as exc:
        print(f"overlap violation: {exc}", file=sys.stderr)
        return EXIT_OVERLAP
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TruncdrError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
