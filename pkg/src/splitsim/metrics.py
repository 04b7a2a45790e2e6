"""Classification metrics and run-comparison statistics.

Conventions:
  * argmax ties go to the lowest class index;
  * AUROC counts tied positive/negative pairs as half;
  * AUPRC is the step-wise sum over descending score thresholds;
  * multi-class scores are macro averages; binary tasks use the class-1
    score only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, MetricUndefinedError


@dataclass(frozen=True)
class ScoredPredictions:
    """``scores`` is (n, C); a single column is read as P(class 1)."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores[:, None]
        labels = np.asarray(self.labels, dtype=np.int64)
        if scores.shape[0] != labels.shape[0]:
            raise DataError(f"{scores.shape[0]} score rows but {labels.shape[0]} labels")
        if not np.all(np.isfinite(scores)):
            raise DataError("scores must be finite")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.num_classes_for(scores)):
            raise DataError("label index out of range for the score columns")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    @staticmethod
    def num_classes_for(scores: np.ndarray) -> int:
        return max(scores.shape[1], 2)

    @property
    def num_classes(self) -> int:
        return self.num_classes_for(self.scores)

    @property
    def binary(self) -> bool:
        return self.num_classes == 2

    def predicted(self) -> np.ndarray:
        if self.scores.shape[1] == 1:
            return (self.scores[:, 0] > 0.5).astype(np.int64)
        return np.argmax(self.scores, axis=1)

    def positive_scores(self, c: int) -> np.ndarray:
        if self.scores.shape[1] == 1:
            return self.scores[:, 0] if c == 1 else -self.scores[:, 0]
        return self.scores[:, c]

    def scored_classes(self) -> list[int]:
        return [1] if self.binary else list(range(self.num_classes))


def confusion(pred: ScoredPredictions) -> np.ndarray:
    c = pred.num_classes
    out = np.zeros((c, c), dtype=np.int64)
    np.add.at(out, (pred.labels, pred.predicted()), 1)
    return out


def accuracy(pred: ScoredPredictions) -> float:
    if len(pred.labels) == 0:
        raise DataError("accuracy of an empty prediction set")
    return float(np.mean(pred.predicted() == pred.labels))


def _binary_auroc(scores: np.ndarray, positive: np.ndarray) -> float:
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    ranks = rankdata(scores)  # average ranks implement the half-credit rule
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _binary_auprc(scores: np.ndarray, positive: np.ndarray) -> float:
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    hits = positive[order].astype(np.float64)
    tp = np.cumsum(hits)
    seen = np.arange(1, len(s) + 1, dtype=np.float64)
    # one threshold per distinct score: keep the last row of each tie block
    last = np.r_[s[1:] != s[:-1], True]
    tp, seen = tp[last], seen[last]
    precision = tp / seen
    recall = tp / hits.sum()
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def _per_class(pred: ScoredPredictions, fn) -> tuple[float, list[int]]:
    if len(pred.labels) == 0:
        raise DataError("metric of an empty prediction set")
    values, skipped = [], []
    for c in pred.scored_classes():
        positive = pred.labels == c
        if positive.all() or not positive.any():
            skipped.append(c)
            continue
        values.append(fn(pred.positive_scores(c), positive))
    if not values:
        raise MetricUndefinedError("every class lacks a positive or a negative sample")
    return float(np.mean(values)), skipped


def auroc_ovr(pred: ScoredPredictions, return_skipped: bool = False):
    value, skipped = _per_class(pred, _binary_auroc)
    return (value, skipped) if return_skipped else value


def auprc(pred: ScoredPredictions, return_skipped: bool = False):
    value, skipped = _per_class(pred, _binary_auprc)
    return (value, skipped) if return_skipped else value


def f1_macro(conf, positive_only: bool = False) -> float:
    """Macro F1 over classes; a class with zero precision and recall scores 0.

    ``positive_only`` returns the class-1 F1 of a binary matrix instead.
    """
    conf = np.asarray(conf, dtype=np.float64)
    tp = np.diag(conf)
    predicted = conf.sum(axis=0)
    actual = conf.sum(axis=1)
    denom = predicted + actual  # 2PR/(P+R) == 2TP/(pred + actual)
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(denom > 0, 2.0 * tp / np.where(denom > 0, denom, 1.0), 0.0)
    if positive_only:
        if conf.shape != (2, 2):
            raise DataError("positive-class F1 needs a 2x2 confusion matrix")
        return float(f1[1])
    return float(f1.mean())


def cohens_kappa(conf) -> float:
    """Cohen's kappa, computed on raw counts as
    (N*trace - sum(row*col)) / (N^2 - sum(row*col)) so integer tables stay exact."""
    conf = np.asarray(conf, dtype=np.float64)
    total = conf.sum()
    if total <= 0:
        raise DataError("kappa of an empty confusion matrix")
    chance = float(np.sum(conf.sum(axis=1) * conf.sum(axis=0)))
    denom = total * total - chance
    if denom == 0.0:
        raise MetricUndefinedError("kappa undefined: expected agreement is 1")
    return float((total * np.trace(conf) - chance) / denom)


def relative_error(v_sl, v_fl):
    """Percentage gap ``|v_sl - v_fl| / |v_fl| * 100``; vectorised over arrays."""
    v_sl = np.asarray(v_sl, dtype=np.float64)
    v_fl = np.asarray(v_fl, dtype=np.float64)
    if np.any(v_fl == 0):
        raise MetricUndefinedError("relative error undefined for a zero reference value")
    out = np.abs(v_sl - v_fl) / np.abs(v_fl) * 100.0
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r2: float


def linfit(xs, ys) -> RegressionFit:
    """Ordinary least squares of ``ys`` on ``xs``. Constant ``ys`` gives r2 = 0."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("linfit needs two 1-d series of equal length")
    if len(x) < 2:
        raise DataError("linfit needs at least two points")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DataError("linfit: all x values are equal")
    dy = y - y.mean()
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(dy @ dy)
    resid = y - (intercept + slope * x)
    r2 = 0.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
    return RegressionFit(slope, intercept, r2)


METRIC_NAMES = ("accuracy", "auroc", "auprc", "f1", "kappa")


def evaluate_all(pred: ScoredPredictions, positive_only_f1: bool = False) -> dict[str, float | None]:
    """Every metric; undefined ones come back as None."""
    conf = confusion(pred)
    out: dict[str, float | None] = {"accuracy": accuracy(pred)}
    for name, fn in (("auroc", lambda: auroc_ovr(pred)), ("auprc", lambda: auprc(pred)),
                     ("f1", lambda: f1_macro(conf, positive_only_f1)),
                     ("kappa", lambda: cohens_kappa(conf))):
        try:
            out[name] = fn()
        except MetricUndefinedError:
            out[name] = None
    return out
