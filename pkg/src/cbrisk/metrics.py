"""Confusion-matrix evaluation metrics (positive class = insolvent)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import DataError

METRIC_KEYS = ("accuracy", "auc", "fmeasure", "gmeans", "mcc")
METRIC_TITLES = {
    "accuracy": "Accuracy",
    "auc": "AUC",
    "fmeasure": "F-measure",
    "gmeans": "G-means",
    "mcc": "MCC",
}


@dataclass(frozen=True)
class Confusion:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise DataError("confusion counts must be non-negative")
        if self.total < 1:
            raise DataError("confusion needs at least one case")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(predictions: Sequence[int], truth: Sequence[int]) -> Confusion:
    """Tally a confusion matrix from parallel label sequences."""
    preds = np.asarray(predictions, dtype=int)
    true = np.asarray(truth, dtype=int)
    if preds.shape != true.shape or preds.ndim != 1:
        raise DataError("predictions and truth must be equal-length vectors")
    if preds.size < 1:
        raise DataError("need at least one prediction")
    return Confusion(
        tp=int(((preds == 1) & (true == 1)).sum()),
        tn=int(((preds == 0) & (true == 0)).sum()),
        fp=int(((preds == 1) & (true == 0)).sum()),
        fn=int(((preds == 0) & (true == 1)).sum()),
    )


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    fpr: float
    fnr: float
    tpr: float
    tnr: float
    f_measure: float
    beta: float
    g_mean: float
    auc_formula: float
    mcc: float
    degenerate: tuple[str, ...] = ()

    def value(self, key: str) -> float:
        return {
            "accuracy": self.accuracy,
            "auc": self.auc_formula,
            "fmeasure": self.f_measure,
            "gmeans": self.g_mean,
            "mcc": self.mcc,
        }[key]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "fpr": self.fpr,
            "fnr": self.fnr,
            "tpr": self.tpr,
            "tnr": self.tnr,
            "f_measure": self.f_measure,
            "beta": self.beta,
            "g_mean": self.g_mean,
            "auc": self.auc_formula,
            "mcc": self.mcc,
            "degenerate": list(self.degenerate),
        }


def compute_metrics(c: Confusion, beta: float = 1.0) -> MetricReport:
    """Evaluate all rate metrics from a confusion matrix.

    A metric whose denominator is zero is reported as 0 and listed in
    ``degenerate`` instead of raising, so evaluation never aborts a fold.
    Here "AUC" is the balanced two-rate form (TPR + TNR) / 2 computed from
    hard labels; use :func:`roc_auc` for the score-ranking variant.
    """
    degenerate = []

    def ratio(num: float, den: float, name: str) -> float:
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    accuracy = c.total and (c.tp + c.tn) / c.total
    fpr = ratio(c.fp, c.tn + c.fp, "fpr")
    fnr = ratio(c.fn, c.fn + c.tp, "fnr")
    tpr = ratio(c.tp, c.tp + c.fn, "tpr")
    tnr = ratio(c.tn, c.fp + c.tn, "tnr")
    bb = beta * beta
    f_measure = ratio((1 + bb) * c.tp, (1 + bb) * c.tp + bb * c.fn + c.fp, "f_measure")
    g_mean = math.sqrt(tnr * tpr)
    auc_formula = (1 + tpr - fpr) / 2
    mcc_den = (
        (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    )
    if mcc_den == 0:
        degenerate.append("mcc")
        mcc = 0.0
    else:
        mcc = (c.tp * c.tn - c.fp * c.fn) / math.sqrt(mcc_den)
    return MetricReport(
        accuracy=float(accuracy),
        fpr=fpr,
        fnr=fnr,
        tpr=tpr,
        tnr=tnr,
        f_measure=f_measure,
        beta=beta,
        g_mean=g_mean,
        auc_formula=auc_formula,
        mcc=mcc,
        degenerate=tuple(degenerate),
    )


def roc_auc(scores: Sequence[float], truth: Sequence[int]) -> float:
    """Rank-based ROC-AUC over continuous scores (ties share ranks).

    Provided for diagnostics; the tabled "AUC" column uses the balanced
    two-rate formula from :func:`compute_metrics`.
    """
    s = np.asarray(scores, float)
    y = np.asarray(truth, int)
    if s.shape != y.shape:
        raise DataError("scores and truth must align")
    pos = s[y == 1]
    neg = s[y == 0]
    if pos.size == 0 or neg.size == 0:
        raise DataError("roc_auc needs both classes")
    order = np.argsort(np.concatenate([neg, pos]), kind="stable")
    ranks = np.empty(order.size, float)
    sorted_vals = np.concatenate([neg, pos])[order]
    # average ranks over tied groups
    i = 0
    while i < order.size:
        j = i
        while j + 1 < order.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    pos_ranks = ranks[neg.size :]
    u = pos_ranks.sum() - pos.size * (pos.size + 1) / 2
    return float(u / (pos.size * neg.size))


def format_metric_table(
    rows: dict[str, MetricReport], metrics: Iterable[str] = METRIC_KEYS
) -> tuple[str, str]:
    """Render variant-by-metric results as (aligned text, CSV) strings.

    The best value in each metric column is flagged with '*'.
    """
    metrics = list(metrics)
    best = {
        m: max(r.value(m) for r in rows.values()) for m in metrics
    }
    name_w = max(len(n) for n in rows) + 2
    header = "".rjust(name_w) + "".join(METRIC_TITLES[m].rjust(12) for m in metrics)
    lines = [header]
    csv_lines = ["variant," + ",".join(METRIC_TITLES[m] for m in metrics)]
    for name, rep in rows.items():
        cells, csv_cells = [], []
        for m in metrics:
            v = rep.value(m)
            flag = "*" if v == best[m] else " "
            cells.append(f"{v:.4f}{flag}".rjust(12))
            csv_cells.append(f"{v:.6f}")
        lines.append(name.ljust(name_w) + "".join(cells))
        csv_lines.append(name + "," + ",".join(csv_cells))
    return "\n".join(lines), "\n".join(csv_lines) + "\n"
