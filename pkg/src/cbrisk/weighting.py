"""Feature relevance scoring and conversion of scores into global weights.

Six scorers are supported: gini, entropy and chi2 work on equal-frequency
bins (10 by default); anova uses the one-way F statistic; mutual_info uses
the k-NN estimator (scikit-learn) with a binned plug-in fallback for tiny
samples; relieff contrasts nearest hits and misses under Manhattan
distance. Raw scores are clamped at zero and normalized to sum to one.

Features are expected pre-scaled to [0, 1]. Univariate scorers drop missing
values per feature; the multivariate scorers (mutual_info, relieff) impute
missing slots with the feature median first.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from sklearn.feature_selection import mutual_info_classif

from .dataset import DataError, Dataset
from .similarity import GlobalWeights

SCORING_METHODS = ("gini", "entropy", "mutual_info", "chi2", "anova", "relieff")

# one-way F blows up when groups differ with zero within-group variance;
# cap keeps normalization finite
_F_CAP = 1e12
_MI_FALLBACK_N = 50


@dataclass(frozen=True)
class ScoringMethod:
    """A relevance scorer plus its hyperparameters."""

    tag: str
    bins: int = 10
    neighbors: int = 0  # 0 = per-method default (3 for mutual_info, 10 for relieff)
    seed: int = 0

    def __post_init__(self):
        if self.tag not in SCORING_METHODS:
            raise DataError(f"unknown scoring method {self.tag!r}")
        if self.bins < 2:
            raise DataError("need at least 2 bins")

    @property
    def k_neighbors(self) -> int:
        if self.neighbors > 0:
            return self.neighbors
        return 3 if self.tag == "mutual_info" else 10


def _quantile_bins(x: np.ndarray, bins: int) -> np.ndarray:
    """Equal-frequency bin assignment; few-valued features bin per value."""
    distinct = np.unique(x)
    if distinct.size <= bins:
        return np.searchsorted(distinct, x)
    interior = np.unique(np.quantile(x, np.linspace(0, 1, bins + 1)))[1:-1]
    return np.searchsorted(interior, x, side="right")


def _gini_impurity(y: np.ndarray) -> float:
    if y.size == 0:
        return 0.0
    p = np.bincount(y, minlength=2) / y.size
    return float(1.0 - (p * p).sum())


def _entropy(y: np.ndarray) -> float:
    if y.size == 0:
        return 0.0
    p = np.bincount(y, minlength=2) / y.size
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _impurity_reduction(
    x: np.ndarray, y: np.ndarray, bins: int, impurity: Callable[[np.ndarray], float]
) -> float:
    assign = _quantile_bins(x, bins)
    total = impurity(y)
    weighted = 0.0
    for b in np.unique(assign):
        members = y[assign == b]
        weighted += members.size / y.size * impurity(members)
    return total - weighted


def _chi2_stat(x: np.ndarray, y: np.ndarray, bins: int) -> float:
    assign = _quantile_bins(x, bins)
    stat = 0.0
    n = y.size
    for b in np.unique(assign):
        in_bin = assign == b
        row = in_bin.sum()
        for cls in (0, 1):
            observed = (in_bin & (y == cls)).sum()
            expected = row * (y == cls).sum() / n
            if expected > 0:
                stat += (observed - expected) ** 2 / expected
    return float(stat)


def _anova_f(x: np.ndarray, y: np.ndarray) -> float:
    groups = [x[y == cls] for cls in (0, 1)]
    n = x.size
    grand = x.mean()
    between = sum(g.size * (g.mean() - grand) ** 2 for g in groups)
    within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    if within == 0:
        return _F_CAP if between > 0 else 0.0
    return float((between / (len(groups) - 1)) / (within / (n - len(groups))))


def _binned_mutual_info(x: np.ndarray, y: np.ndarray, bins: int) -> float:
    assign = _quantile_bins(x, bins)
    n = y.size
    mi = 0.0
    for b in np.unique(assign):
        for cls in (0, 1):
            joint = ((assign == b) & (y == cls)).sum() / n
            if joint > 0:
                px = (assign == b).sum() / n
                py = (y == cls).sum() / n
                mi += joint * np.log(joint / (px * py))
    return float(mi)


def _mutual_info(x: np.ndarray, y: np.ndarray, method: ScoringMethod) -> float:
    if x.size < _MI_FALLBACK_N:
        return _binned_mutual_info(x, y, method.bins)
    mi = mutual_info_classif(
        x.reshape(-1, 1),
        y,
        n_neighbors=method.k_neighbors,
        random_state=method.seed,
    )
    return float(mi[0])


def _impute_median(X: np.ndarray) -> np.ndarray:
    filled = X.copy()
    for j in range(X.shape[1]):
        col = filled[:, j]
        nan = np.isnan(col)
        if nan.any():
            med = np.nanmedian(col) if (~nan).any() else 0.5
            col[nan] = med
    return filled


def _relieff_scores(X: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    """Hit/miss contrast over all cases; X must be complete and scaled."""
    n, L = X.shape
    dist = np.abs(X[:, None, :] - X[None, :, :]).sum(axis=-1)
    np.fill_diagonal(dist, np.inf)
    scores = np.zeros(L)
    for i in range(n):
        same = np.flatnonzero(y == y[i])
        same = same[same != i]
        other = np.flatnonzero(y != y[i])
        k_hit = min(k, same.size)
        k_miss = min(k, other.size)
        if k_hit == 0 or k_miss == 0:
            continue
        hits = same[np.argsort(dist[i, same], kind="stable")[:k_hit]]
        misses = other[np.argsort(dist[i, other], kind="stable")[:k_miss]]
        scores += np.abs(X[misses] - X[i]).mean(axis=0)
        scores -= np.abs(X[hits] - X[i]).mean(axis=0)
    return scores / n


def score_features(train: Dataset, method: ScoringMethod) -> GlobalWeights:
    """Score every feature against the label and normalize into weights.

    Constant features score 0 under every method. If every score clamps to
    zero the weights fall back to uniform with a warning.
    """
    train.require_labels()
    y_all = train.labels.astype(int)
    if len(np.unique(y_all)) < 2:
        raise DataError("feature scoring needs both classes present")
    X = train.X
    L = train.n_features
    raw = np.zeros(L)

    nonmissing = ~np.isnan(X)
    is_constant = np.array(
        [np.unique(X[nonmissing[:, j], j]).size <= 1 for j in range(L)]
    )

    if method.tag in ("mutual_info", "relieff"):
        filled = _impute_median(X)
        if method.tag == "relieff":
            raw = _relieff_scores(filled, y_all, method.k_neighbors)
        else:
            for j in range(L):
                if not is_constant[j]:
                    raw[j] = _mutual_info(filled[:, j], y_all, method)
    else:
        for j in range(L):
            if is_constant[j]:
                continue
            keep = nonmissing[:, j]
            x, y = X[keep, j], y_all[keep]
            if np.unique(y).size < 2:
                continue
            if method.tag == "gini":
                raw[j] = _impurity_reduction(x, y, method.bins, _gini_impurity)
            elif method.tag == "entropy":
                raw[j] = _impurity_reduction(x, y, method.bins, _entropy)
            elif method.tag == "chi2":
                raw[j] = _chi2_stat(x, y, method.bins)
            elif method.tag == "anova":
                raw[j] = _anova_f(x, y)

    raw = np.where(is_constant, 0.0, raw)
    raw = np.maximum(raw, 0.0)
    if raw.sum() <= 0:
        warnings.warn(f"{method.tag}: all scores zero, using uniform weights")
        return GlobalWeights.uniform(L)
    return GlobalWeights.normalized(raw)


def relevance_percent(weights: GlobalWeights) -> np.ndarray:
    """Weights as percentages summing to 100."""
    return weights.values * 100.0


def format_relevance_table(schema, weights: GlobalWeights) -> str:
    """Relevance table sorted by descending share, one 'name percent' row each."""
    pct = relevance_percent(weights)
    order = np.argsort(-pct, kind="stable")
    lines = [f"{schema.names[j]} {pct[j]:.2f}" for j in order]
    return "\n".join(lines)


def weights_table(schema, weights: GlobalWeights) -> str:
    """Three-column text table (name, weight, percent) in schema order."""
    pct = relevance_percent(weights)
    width = max(len(n) for n in schema.names)
    lines = [
        f"{schema.names[j].ljust(width)}  {weights.values[j]:.6f}  {pct[j]:6.2f}"
        for j in range(schema.n_features)
    ]
    return "\n".join(lines)
