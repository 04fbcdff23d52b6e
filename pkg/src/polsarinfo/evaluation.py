"""Confusion matrices over testing regions and the derived accuracy measures."""
import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np


class EvaluationError(ValueError):
    pass


class DegenerateKappaWarning(UserWarning):
    """Chance agreement is 1, so kappa is undefined and reported as 0."""


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[t, c] = test pixels of true class t predicted as class c."""

    counts: np.ndarray
    class_ids: tuple
    class_names: tuple = None

    def __post_init__(self):
        m = np.asarray(self.counts, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.class_ids):
            raise ValueError(f"counts must be K x K for {len(self.class_ids)} classes, got {m.shape}")
        if np.any(m < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", m)
        object.__setattr__(self, "class_ids", tuple(int(c) for c in self.class_ids))
        if self.class_names is None:
            object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_ids))

    @property
    def total(self):
        return int(self.counts.sum())

    @classmethod
    def from_counts(cls, counts, class_ids=None, class_names=None):
        counts = np.asarray(counts)
        if class_ids is None:
            class_ids = tuple(range(1, counts.shape[0] + 1))
        return cls(counts, tuple(class_ids), class_names)


def _as_counts(M):
    m = M.counts if isinstance(M, ConfusionMatrix) else np.asarray(M)
    return np.asarray(m, dtype=np.float64)


def confusion(pred, regions):
    """Tally predictions over the testing pixels of ``regions``."""
    labels = pred.labels if hasattr(pred, "labels") else np.asarray(pred)
    if labels.shape != regions.shape:
        raise EvaluationError(f"label map {labels.shape} does not match regions {regions.shape}")
    truth = regions.mask("test")
    ys, xs = np.nonzero(truth)
    if ys.size == 0:
        raise EvaluationError("no testing pixels")
    t = truth[ys, xs]
    p = labels[ys, xs]
    if np.any(p == 0):
        k = int(np.argmax(p == 0))
        raise EvaluationError(
            f"{int((p == 0).sum())} test pixels are unpredicted (label 0), first at x={xs[k]} y={ys[k]}"
        )
    ids = np.asarray(regions.class_ids)
    unknown = np.setdiff1d(np.unique(p), ids)
    if unknown.size:
        raise EvaluationError(f"predicted class ids {unknown.tolist()} are not in the region set")
    index = np.searchsorted(ids, np.stack([t, p]))
    counts = np.zeros((ids.size, ids.size), dtype=np.int64)
    np.add.at(counts, (index[0], index[1]), 1)
    return ConfusionMatrix(counts, tuple(ids), regions.class_names)


def overall_accuracy(M):
    m = _as_counts(M)
    total = m.sum()
    if total <= 0:
        raise EvaluationError("empty confusion matrix")
    return float(np.trace(m) / total)


def kappa(M):
    """Cohen's kappa. Returns 0 with a DegenerateKappaWarning when chance agreement is 1.

    Evaluated as (N tr - sum r c) / (N^2 - sum r c) in exact integer arithmetic
    so that the only rounding is the final division.
    """
    m = _as_counts(M)
    if np.any(m != np.round(m)):
        raise EvaluationError("kappa needs integer counts")
    counts = [[int(v) for v in row] for row in m]
    total = sum(map(sum, counts))
    if total <= 0:
        raise EvaluationError("empty confusion matrix")
    trace = sum(counts[k][k] for k in range(len(counts)))
    rows = [sum(r) for r in counts]
    cols = [sum(c) for c in zip(*counts)]
    chance = sum(r * c for r, c in zip(rows, cols))
    if chance == total * total:
        warnings.warn("expected agreement is 1; kappa reported as 0", DegenerateKappaWarning,
                      stacklevel=2)
        return 0.0
    return (total * trace - chance) / (total * total - chance)


def per_class_accuracy(M):
    """Producer's accuracy per class (row-normalised diagonal); NaN for empty rows."""
    m = _as_counts(M)
    rows = m.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rows > 0, np.diag(m) / np.where(rows > 0, rows, 1.0), np.nan)


def users_accuracy(M):
    """User's accuracy per class (column-normalised diagonal); NaN for empty columns."""
    m = _as_counts(M)
    cols = m.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(cols > 0, np.diag(m) / np.where(cols > 0, cols, 1.0), np.nan)


@dataclass(frozen=True)
class Metrics:
    method: str
    window: int
    F: float
    kappa: float
    CA: tuple
    UA: tuple
    class_names: tuple


def metrics(M, method="", window=0):
    return Metrics(
        method=str(method),
        window=int(window),
        F=overall_accuracy(M),
        kappa=kappa(M),
        CA=tuple(float(v) for v in per_class_accuracy(M)),
        UA=tuple(float(v) for v in users_accuracy(M)),
        class_names=tuple(M.class_names),
    )


def _fmt(x):
    return "nan" if np.isnan(x) else repr(float(x))


def metrics_csv(rows):
    """CSV text with columns method,window,F,kappa,CA_<class>...,UA_<class>..."""
    rows = list(rows)
    if not rows:
        raise EvaluationError("no metrics rows")
    names = rows[0].class_names
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "window", "F", "kappa"]
               + [f"CA_{n}" for n in names] + [f"UA_{n}" for n in names])
    for r in rows:
        if r.class_names != names:
            raise EvaluationError("metrics rows disagree on the class list")
        w.writerow([r.method, r.window, _fmt(r.F), _fmt(r.kappa)]
                   + [_fmt(v) for v in r.CA] + [_fmt(v) for v in r.UA])
    return buf.getvalue()


def read_metrics_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
