"""Correlation distance 1 - |corr| between measure series, and its matrices."""
from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from ._fmt import fmt_float

log = logging.getLogger(__name__)

DEFAULT_MIN_SUPPORT = 30
# Standardized variance below this on the common support counts as constant.
_CONSTANT_VAR = 1e-10


def correlation_distance(x, y, min_support: int = DEFAULT_MIN_SUPPORT) -> float:
    """``1 - |pearson(x, y)|`` over the entries where both are present.

    Returns NaN when fewer than ``min_support`` entries are shared or either
    series is constant on them.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = ~(np.isnan(x) | np.isnan(y))
    if ok.sum() < max(min_support, 2):
        return float("nan")
    x, y = x[ok], y[ok]
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = np.dot(dx, dx)
    syy = np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        return float("nan")
    r = np.dot(dx, dy) / np.sqrt(sxx * syy)
    return float(1.0 - min(abs(r), 1.0))


@dataclass
class DistanceMatrix:
    """Symmetric measure-by-measure distances with NaN for undefined entries.

    ``support`` holds the shared-observation count behind each entry; after
    averaging, ``counts`` holds how many matrices defined each entry.
    """

    ids: tuple[str, ...]
    d: np.ndarray
    support: np.ndarray | None = None
    counts: np.ndarray | None = None

    def __post_init__(self):
        self.ids = tuple(self.ids)
        self.d = np.asarray(self.d, dtype=float)
        n = len(self.ids)
        if self.d.shape != (n, n):
            raise ValueError(f"matrix shape {self.d.shape} does not match {n} ids")
        if len(set(self.ids)) != n:
            raise ValueError("duplicate ids")

    def __len__(self):
        return len(self.ids)

    @property
    def is_complete(self) -> bool:
        return not np.isnan(self.d).any()

    def undefined_pairs(self) -> list[tuple[str, str]]:
        i, j = np.nonzero(np.triu(np.isnan(self.d), 1))
        return [(self.ids[a], self.ids[b]) for a, b in zip(i, j)]

    def subset(self, ids) -> "DistanceMatrix":
        ids = list(ids)
        idx = [self.ids.index(i) for i in ids]
        sub = np.ix_(idx, idx)
        return DistanceMatrix(
            ids, self.d[sub],
            None if self.support is None else self.support[sub],
            None if self.counts is None else self.counts[sub],
        )

    def drop_incomplete(self) -> tuple["DistanceMatrix", list[str]]:
        """Drop measures until no entry is undefined.

        Greedy: repeatedly remove the measure with the most undefined entries
        (lowest index on ties).
        """
        keep = list(range(len(self.ids)))
        dropped = []
        bad = np.isnan(self.d)
        while keep:
            sub = bad[np.ix_(keep, keep)]
            per = sub.sum(axis=1)
            if not per.any():
                break
            worst = keep[int(np.argmax(per))]
            dropped.append(self.ids[worst])
            keep.remove(worst)
        for name in dropped:
            log.warning("measure %s dropped: undefined distances", name)
        return self.subset([self.ids[i] for i in keep]), dropped

    def to_csv(self, path, which: str = "d") -> None:
        mat = getattr(self, which)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.ids)
            for row in mat:
                if which == "d":
                    w.writerow([fmt_float(v) for v in row])
                else:
                    w.writerow([int(v) for v in row])

    @classmethod
    def read_csv(cls, path) -> "DistanceMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path}: empty distance file")
        ids = rows[0]
        d = np.array([[float(v) if v != "" else np.nan for v in r] for r in rows[1:]],
                     dtype=float).reshape(len(rows) - 1, len(ids))
        return cls(ids, d)


def pairwise_distances(panel, min_support: int = DEFAULT_MIN_SUPPORT,
                       min_coverage: float = 0.0, ids=None) -> DistanceMatrix:
    """All-pairs correlation distances of a panel's columns.

    Uses pairwise-complete observations.  Columns are centred and scaled by
    their own mean/std first so the one-pass sums below stay well conditioned.
    Columns present in fewer than ``min_coverage`` of the rows are treated as
    entirely missing.
    """
    if hasattr(panel, "values") and hasattr(panel, "measures"):
        X, ids = panel.values, panel.measures
    else:
        X = np.asarray(panel, dtype=float)
        ids = ids if ids is not None else tuple(f"x{i}" for i in range(X.shape[1]))
    X = np.array(X, dtype=float)
    n, p = X.shape
    present = ~np.isnan(X)
    if n and min_coverage > 0:
        thin = present.mean(axis=0) < min_coverage
        X[:, thin] = np.nan
        present[:, thin] = False

    with np.errstate(invalid="ignore", divide="ignore"), warnings.catch_warnings():
        # all-missing columns are expected here
        warnings.simplefilter("ignore", RuntimeWarning)
        mu = np.nanmean(np.where(present, X, np.nan), axis=0) if n else np.zeros(p)
        sd = np.nanstd(np.where(present, X, np.nan), axis=0) if n else np.zeros(p)
    sd = np.where(sd > 0, sd, 1.0)
    mu = np.nan_to_num(mu)
    Z = np.where(present, (X - mu) / sd, 0.0)
    M = present.astype(float)

    cnt = M.T @ M
    sx = Z.T @ M          # sx[i, j]: sum of z_i over rows where j is also present
    sxx = (Z * Z).T @ M
    sxy = Z.T @ Z
    with np.errstate(invalid="ignore", divide="ignore"):
        mx = sx / cnt
        my = sx.T / cnt
        cov = sxy / cnt - mx * my
        vx = sxx / cnt - mx * mx
        vy = sxx.T / cnt - my * my
        r = cov / np.sqrt(vx * vy)
    ok = (cnt >= max(min_support, 2)) & (vx > _CONSTANT_VAR) & (vy > _CONSTANT_VAR)
    d = np.full((p, p), np.nan)
    d[ok] = 1.0 - np.minimum(np.abs(r[ok]), 1.0)
    d = np.fmin(d, d.T)  # exact symmetry
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(ids, d, support=cnt.astype(np.int64))


def average_distances(mats) -> DistanceMatrix:
    """Entrywise mean over the matrices that define each entry."""
    mats = list(mats)
    if not mats:
        raise ValueError("no distance matrices to average")
    ids = mats[0].ids
    for m in mats[1:]:
        if m.ids != ids:
            raise ValueError("distance matrices have different measure ids")
    stack = np.stack([m.d for m in mats])
    defined = ~np.isnan(stack)
    counts = defined.sum(axis=0)
    total = np.where(defined, stack, 0.0).sum(axis=0)
    d = np.full(total.shape, np.nan)
    d[counts > 0] = total[counts > 0] / counts[counts > 0]
    d = np.fmin(d, d.T)
    np.fill_diagonal(d, 0.0)
    support = None
    if all(m.support is not None for m in mats):
        support = np.stack([m.support for m in mats]).sum(axis=0)
    return DistanceMatrix(ids, d, support=support, counts=counts)
