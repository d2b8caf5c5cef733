"""Dataset container, CSV ingestion, time reversal and fold splitting.

A dataset holds one row per observed subject: the entry (truncation) time
``q``, the observed time ``x`` (event or censoring), the event indicator
``delta``, a fixed-width covariate block ``z`` and a nonnegative case weight.
Subjects enter the sample only when ``q < x``; that inequality is enforced at
construction and everywhere downstream.

Censoring tags
--------------
``"none"``
    No right censoring; ``delta`` must be identically one.
``"c1"``
    Censoring may occur before study entry; subjects are observed when the
    entry time precedes the possibly-censored time.
``"c2"``
    Censoring only after entry, modeled on the residual time scale.
"""

import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._rng import rng_for
from .errors import (
    BadK,
    InvariantViolation,
    MissingColumn,
    NonNumericCell,
    TauTooSmall,
    WrongCensoringTag,
)

CENSORING_TAGS = ("none", "c1", "c2")


class Observation(NamedTuple):
    """A single subject: entry time, observed time, event flag, covariates, weight."""

    q: float
    x: float
    delta: int
    z: np.ndarray
    weight: float = 1.0


class ResidualView(NamedTuple):
    """Residual-time right-censored sample: the residual censoring time is the
    event and the residual event time does the censoring."""

    time: np.ndarray
    event: np.ndarray
    weight: np.ndarray


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of observations with a censoring tag.

    Attributes
    ----------
    q, x : ndarray of shape (n,)
        Entry times and observed (event or censoring) times, ``q < x``.
    delta : ndarray of shape (n,)
        Event indicators in {0, 1}.
    z : ndarray of shape (n, d)
        Covariates; ``d`` may be zero.
    weight : ndarray of shape (n,)
        Nonnegative case weights, default 1.
    censoring : str
        One of ``"none"``, ``"c1"``, ``"c2"``.
    label : str
        Free-text description.
    """

    q: np.ndarray
    x: np.ndarray
    delta: np.ndarray
    z: np.ndarray
    weight: np.ndarray
    censoring: str = "none"
    label: str = ""

    @classmethod
    def from_arrays(cls, q, x, delta=None, z=None, weight=None,
                    censoring="none", label=""):
        """Build a validated dataset from plain arrays.

        Raises :class:`InvariantViolation` on the first offending row.
        """
        q = np.asarray(q, dtype=float)
        x = np.asarray(x, dtype=float)
        n = q.shape[0]
        if n == 0:
            raise InvariantViolation(0, "dataset is empty")
        if delta is None:
            delta = np.ones(n)
        delta = np.asarray(delta, dtype=float)
        if z is None:
            z = np.empty((n, 0))
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if weight is None:
            weight = np.ones(n)
        weight = np.asarray(weight, dtype=float)
        if censoring not in CENSORING_TAGS:
            raise WrongCensoringTag(f"censoring must be one of {CENSORING_TAGS}")
        if not (x.shape == delta.shape == weight.shape == (n,)) or z.shape[0] != n:
            raise InvariantViolation(0, "column lengths differ")

        for name, a in (("q", q), ("x", x), ("z", z), ("weight", weight)):
            if not np.all(np.isfinite(a)):
                i = int(np.argwhere(~np.isfinite(a.reshape(n, -1)).all(axis=1))[0])
                raise InvariantViolation(i, f"non-finite {name}")
        bad = np.flatnonzero(q < 0)
        if bad.size:
            raise InvariantViolation(int(bad[0]), "q < 0")
        bad = np.flatnonzero(x <= 0)
        if bad.size:
            raise InvariantViolation(int(bad[0]), "x <= 0")
        bad = np.flatnonzero(q >= x)
        if bad.size:
            raise InvariantViolation(int(bad[0]), "q >= x")
        bad = np.flatnonzero(~np.isin(delta, (0.0, 1.0)))
        if bad.size:
            raise InvariantViolation(int(bad[0]), "bad delta")
        if censoring == "none":
            bad = np.flatnonzero(delta != 1.0)
            if bad.size:
                raise InvariantViolation(
                    int(bad[0]), "delta must be 1 when censoring tag is 'none'"
                )
        bad = np.flatnonzero(weight < 0)
        if bad.size:
            raise InvariantViolation(int(bad[0]), "negative weight")

        return cls(
            q=_freeze(q), x=_freeze(x), delta=_freeze(delta.astype(np.int8)),
            z=_freeze(z), weight=_freeze(weight), censoring=censoring, label=label,
        )

    @property
    def n(self):
        return self.q.shape[0]

    @property
    def d(self):
        return self.z.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return Observation(
            float(self.q[i]), float(self.x[i]), int(self.delta[i]),
            self.z[i], float(self.weight[i]),
        )

    def subset(self, idx, label=None):
        """New dataset restricted to (or resampled over) the given row indices."""
        idx = np.asarray(idx)
        return Dataset.from_arrays(
            self.q[idx], self.x[idx], self.delta[idx], self.z[idx],
            self.weight[idx], self.censoring,
            self.label if label is None else label,
        )

    def with_weights(self, weight, label=None):
        """New dataset with the case weights replaced."""
        return Dataset.from_arrays(
            self.q, self.x, self.delta, self.z, weight, self.censoring,
            self.label if label is None else label,
        )

    def uncensored(self):
        """The rows with an observed event."""
        return self.subset(np.flatnonzero(self.delta == 1))


# ---------------------------------------------------------------------------
# CSV ingestion / serialization


def _parse_cell(raw, row, col):
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise NonNumericCell(row, col, raw) from None
    if not np.isfinite(v):
        raise NonNumericCell(row, col, raw)
    return v


def load_dataset(source, schema=None, censoring="none", label=""):
    """Read a dataset from CSV.

    Parameters
    ----------
    source : path, file-like, bytes or str
        CSV text with a header row.
    schema : dict, optional
        Maps the canonical names ``q``, ``x``, ``delta``, ``weight`` and
        ``z`` to column names.  ``schema["z"]`` may be an explicit list of
        covariate columns; by default covariates are auto-detected as columns
        named ``z1, z2, ...``.
    censoring : str
        Censoring tag of the data.

    Returns
    -------
    Dataset
        Row order is preserved.
    """
    if isinstance(source, bytes):
        text = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str) and "\n" in source:
        text = io.StringIO(source)
    elif hasattr(source, "read"):
        raw = source.read()
        text = io.StringIO(raw.decode("utf-8") if isinstance(raw, bytes) else raw)
    else:
        text = open(source, "r", newline="")

    schema = dict(schema or {})
    with text:
        reader = csv.reader(text)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn("q") from None
        colidx = {name: i for i, name in enumerate(header)}

        def col_of(canon, required=True):
            name = schema.get(canon, canon)
            if name not in colidx:
                if required:
                    raise MissingColumn(name)
                return None
            return colidx[name]

        iq, ix, idelta = col_of("q"), col_of("x"), col_of("delta")
        iw = col_of("weight", required=False)
        if "z" in schema:
            zcols = [(nm, colidx[nm]) for nm in schema["z"]]
            for nm, _ in zcols:
                if nm not in colidx:
                    raise MissingColumn(nm)
        else:
            znames = sorted(
                (nm for nm in header if nm.startswith("z") and nm[1:].isdigit()),
                key=lambda nm: int(nm[1:]),
            )
            zcols = [(nm, colidx[nm]) for nm in znames]

        q, x, delta, w, zrows = [], [], [], [], []
        for r, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            q.append(_parse_cell(row[iq], r, "q"))
            x.append(_parse_cell(row[ix], r, "x"))
            delta.append(_parse_cell(row[idelta], r, "delta"))
            w.append(1.0 if iw is None else _parse_cell(row[iw], r, "weight"))
            zrows.append([_parse_cell(row[j], r, nm) for nm, j in zcols])

    n = len(q)
    z = np.array(zrows, dtype=float) if zcols else np.empty((n, 0))
    return Dataset.from_arrays(q, x, delta, z, w, censoring, label)


def _fmt(v):
    # 12 significant digits, round-half-even, so written files are stable
    # across write/read cycles.
    return np.format_float_positional(
        float(v), precision=12, unique=False, fractional=False, trim="-"
    )


def save_dataset(ds, target):
    """Write a dataset as CSV with 12-significant-digit decimal text.

    A load/save/load round trip is idempotent: re-serializing the reloaded
    dataset reproduces the file byte for byte.
    """
    close = False
    if hasattr(target, "write"):
        fh = target
    else:
        fh = open(target, "w", newline="")
        close = True
    try:
        writer = csv.writer(fh)
        header = ["q", "x", "delta"] + [f"z{j + 1}" for j in range(ds.d)] + ["weight"]
        writer.writerow(header)
        for i in range(ds.n):
            row = [_fmt(ds.q[i]), _fmt(ds.x[i]), str(int(ds.delta[i]))]
            row += [_fmt(v) for v in ds.z[i]]
            row.append(_fmt(ds.weight[i]))
            writer.writerow(row)
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# time reversal and residual views


def default_tau(ds):
    """Default reversal horizon: one time unit past the largest observed time."""
    return float(ds.x.max()) + 1.0


def reverse_time(ds, tau):
    """Swap the roles of entry and event time on the reversed clock.

    Each pair ``(q, x)`` maps to ``(tau - x, tau - q)``: on the reversed
    scale the original entry time becomes the event and is left truncated by
    the reversed observed time.  All reversed rows are events.

    ``tau`` must exceed every observed time.  Applying the map twice with the
    same ``tau`` restores the original dataset.
    """
    if tau <= ds.x.max():
        raise TauTooSmall(tau, float(ds.x.max()))
    if ds.censoring == "c2" and np.any(ds.delta == 0):
        raise WrongCensoringTag(
            "reverse_time under tag 'c2' applies to the uncensored subset; "
            "restrict the dataset first"
        )
    return Dataset.from_arrays(
        tau - ds.x, tau - ds.q, np.ones(ds.n), ds.z, ds.weight,
        censoring="none", label=f"reversed(tau={tau}) {ds.label}".strip(),
    )


def residual_censoring_view(ds):
    """Residual-time sample ``(x - q, 1 - delta)`` for censoring tag ``c2``.

    On the residual scale the residual censoring time is right censored by
    the residual event time, so the censoring indicator is flipped: the
    "event" of the view is being censored in the original data.
    """
    if ds.censoring != "c2":
        raise WrongCensoringTag("residual_censoring_view requires censoring tag 'c2'")
    return ResidualView(ds.x - ds.q, 1 - np.asarray(ds.delta, dtype=int), ds.weight)


# ---------------------------------------------------------------------------
# fold assignment


@dataclass(frozen=True)
class FoldAssignment:
    """Deterministic fold labels in ``1..K`` with sizes differing by at most 1."""

    fold_of: np.ndarray
    K: int
    seed: int
    sizes: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sizes", np.bincount(self.fold_of, minlength=self.K + 1)[1:])

    def indices(self, k):
        """Row indices of fold ``k`` (1-based)."""
        return np.flatnonzero(self.fold_of == k)

    def complement(self, k):
        """Row indices outside fold ``k``."""
        return np.flatnonzero(self.fold_of != k)


def split_folds(n, K, seed):
    """Randomly split ``n`` rows into ``K`` folds of nearly equal size.

    The assignment is a seeded uniform permutation dealt round-robin, so it is
    reproducible across runs and platforms for a fixed ``(n, K, seed)``.
    """
    if not (2 <= K <= n):
        raise BadK(f"need 2 <= K <= n, got K={K}, n={n}")
    perm = rng_for(seed, 0).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = 1 + np.arange(n) % K
    fold_of.flags.writeable = False
    return FoldAssignment(fold_of=fold_of, K=K, seed=seed)
