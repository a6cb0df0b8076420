"""F1, Matthews correlation and interpolated precision/recall AUC."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


class UndefinedMetricWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "Confusion":
        t = np.asarray(y_true) == 1
        p = np.asarray(y_pred) == 1
        return cls(
            tp=int(np.sum(t & p)),
            fp=int(np.sum(~t & p)),
            tn=int(np.sum(~t & ~p)),
            fn=int(np.sum(t & ~p)),
        )


def f1(c: Confusion) -> float:
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        warnings.warn("F1 is undefined without positives; reporting 0", UndefinedMetricWarning)
        return 0.0
    return 2 * c.tp / denom


def mcc(c: Confusion) -> float:
    factors = (c.tp + c.fp, c.tp + c.fn, c.tn + c.fp, c.tn + c.fn)
    if 0 in factors:
        return 0.0
    # math.prod keeps the denominator in exact integers before the root
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(math.prod(factors))


@dataclass(frozen=True)
class PrCurve:
    recall: np.ndarray
    precision: np.ndarray
    area: float


def _achievable_points(scores: np.ndarray, positive: np.ndarray):
    """Cumulative (TP, FP) after each block of tied scores, highest first."""
    order = np.argsort(-scores, kind="mergesort")
    s, pos = scores[order], positive[order]
    tp = np.cumsum(pos)
    fp = np.cumsum(~pos)
    last_of_block = np.append(s[1:] != s[:-1], True)
    return tp[last_of_block], fp[last_of_block]


def interpolated_pr_auc(scores, labels) -> PrCurve:
    """Area under the interpolated precision/recall curve.

    Between consecutive achievable points A and B, one point is inserted for
    every intermediate true-positive count, with false positives growing
    linearly in TP.  The curve is held at the precision of the first point
    with nonzero recall down to recall 0; the area is the trapezoidal integral
    over recall.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(labels) == 1
    if scores.shape != positive.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise ValueError("interpolated PR AUC needs at least one positive label")

    tps, fps = _achievable_points(scores, positive)
    recall, precision = [], []
    prev_tp, prev_fp = 0, 0.0
    for tp_b, fp_b in zip(tps, fps):
        if tp_b == prev_tp:
            if tp_b > 0:
                recall.append(tp_b / n_pos)
                precision.append(tp_b / (tp_b + fp_b))
        else:
            slope = (fp_b - prev_fp) / (tp_b - prev_tp)
            for x in range(1, int(tp_b - prev_tp) + 1):
                tp = prev_tp + x
                fp = prev_fp + slope * x
                recall.append(tp / n_pos)
                precision.append(tp / (tp + fp))
        prev_tp, prev_fp = int(tp_b), float(fp_b)

    recall = np.array([0.0] + recall)
    precision = np.array([precision[0]] + precision)
    area = float(np.sum(np.diff(recall) * (precision[1:] + precision[:-1]) / 2.0))
    return PrCurve(recall=recall, precision=precision, area=area)


def evaluate(y_true, scores) -> dict:
    """F1, MCC and iAUC for one block of scored documents."""
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    c = Confusion.from_predictions(y_true, (scores > 0).astype(int))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetricWarning)
        out = {"f1": f1(c), "mcc": mcc(c)}
    out["iauc"] = interpolated_pr_auc(scores, y_true).area if (y_true == 1).any() else float("nan")
    return out


def mean_and_se(values) -> tuple[float, float]:
    """Arithmetic mean and standard error (sample std / sqrt(n))."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return float("nan"), float("nan")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))
