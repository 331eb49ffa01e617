"""Local and global case similarity for all six retrieval variants.

Variants: ``acbr`` (asymmetric polynomial local similarities), ``ewcbr`` /
``epcbr`` (its unit-exponent ablations with uniform / learned weights), and
the distance-based ``ecbr`` (Euclidean), ``mcbr`` (Manhattan) and ``gcbr``
(grey coefficient degrees).

All functions expect values scaled into [0, 1]; NaN marks a missing slot.
The batch engine partitions query rows across workers and computes each
matrix cell with the exact same arithmetic as the scalar functions, so
results are bit-identical for any worker count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import Dataset, DataError

VARIANTS = ("acbr", "ecbr", "mcbr", "gcbr", "ewcbr", "epcbr")
ASYMMETRIC_FAMILY = ("acbr", "ewcbr", "epcbr")

# Which side of the comparison each exponent governs. "standard" applies the
# `below` exponent when the reference value lies at or below the query value;
# "flipped" swaps the two sides.
BRANCH_CONVENTIONS = ("standard", "flipped")


@dataclass(frozen=True)
class LocalParams:
    """Per-feature exponent pair of the asymmetric local similarity.

    ``below[j]`` applies when the reference value is <= the query value,
    ``above[j]`` when it is greater (under the standard branch convention).
    """

    below: np.ndarray
    above: np.ndarray

    def __post_init__(self):
        below = np.asarray(self.below, float)
        above = np.asarray(self.above, float)
        object.__setattr__(self, "below", below)
        object.__setattr__(self, "above", above)
        if below.shape != above.shape or below.ndim != 1:
            raise DataError("exponent vectors must be 1-D and equal length")
        for name, v in (("below", below), ("above", above)):
            if not np.isfinite(v).all() or (v <= 0).any():
                raise DataError(f"{name} exponents must be positive and finite")

    @classmethod
    def unit(cls, n: int) -> "LocalParams":
        return cls(below=np.ones(n), above=np.ones(n))

    @property
    def n_features(self) -> int:
        return self.below.size


@dataclass(frozen=True)
class GlobalWeights:
    """Non-negative per-feature weights summing to one."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1:
            raise DataError("weights must be a 1-D vector")
        if (values < 0).any() or not np.isfinite(values).all():
            raise DataError("weights must be non-negative and finite")
        if abs(values.sum() - 1.0) > 1e-9:
            raise DataError(f"weights must sum to 1, got {values.sum()!r}")

    @classmethod
    def uniform(cls, n: int) -> "GlobalWeights":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, raw) -> "GlobalWeights":
        raw = np.asarray(raw, float)
        total = raw.sum()
        if total <= 0:
            raise DataError("cannot normalize weights with non-positive sum")
        return cls(raw / total)

    @property
    def n_features(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SimilarityModel:
    """A fully specified similarity function over a feature schema."""

    variant: str
    weights: GlobalWeights
    local: Optional[LocalParams] = None
    ranges: Optional[np.ndarray] = None  # post-scaling feature ranges, all 1
    missing_sim: float = 0.0
    branch_convention: str = "standard"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DataError(f"unknown variant {self.variant!r}")
        if self.branch_convention not in BRANCH_CONVENTIONS:
            raise DataError(f"unknown branch convention {self.branch_convention!r}")
        if not 0.0 <= self.missing_sim <= 1.0:
            raise DataError("missing_sim must lie in [0, 1]")
        L = self.weights.n_features
        if self.variant in ASYMMETRIC_FAMILY:
            local = self.local if self.local is not None else LocalParams.unit(L)
            if local.n_features != L:
                raise DataError("exponent count must match weight count")
            if self.variant in ("ewcbr", "epcbr"):
                if not (np.all(local.below == 1.0) and np.all(local.above == 1.0)):
                    raise DataError(f"{self.variant} requires unit exponents")
            object.__setattr__(self, "local", local)
        ranges = np.ones(L) if self.ranges is None else np.asarray(self.ranges, float)
        if ranges.shape != (L,) or (ranges <= 0).any():
            raise DataError("ranges must be positive and match feature count")
        object.__setattr__(self, "ranges", ranges)

    @property
    def n_features(self) -> int:
        return self.weights.n_features

    @classmethod
    def acbr(cls, weights: GlobalWeights, local: LocalParams, **kw) -> "SimilarityModel":
        return cls(variant="acbr", weights=weights, local=local, **kw)

    @classmethod
    def ewcbr(cls, n_features: int, **kw) -> "SimilarityModel":
        return cls(
            variant="ewcbr",
            weights=GlobalWeights.uniform(n_features),
            local=LocalParams.unit(n_features),
            **kw,
        )

    @classmethod
    def epcbr(cls, weights: GlobalWeights, **kw) -> "SimilarityModel":
        return cls(
            variant="epcbr",
            weights=weights,
            local=LocalParams.unit(weights.n_features),
            **kw,
        )


def _oriented_exponents(model: SimilarityModel) -> tuple[np.ndarray, np.ndarray]:
    if model.branch_convention == "flipped":
        return model.local.above, model.local.below
    return model.local.below, model.local.above


def local_similarity(
    q: float,
    c: float,
    exp_below: float,
    exp_above: float,
    value_range: float = 1.0,
    missing_sim: float = 0.0,
    branch_convention: str = "standard",
) -> float:
    """Asymmetric local similarity of two scaled feature values.

    Returns ``((range - |q - c|) / range) ** e`` where ``e`` is
    ``exp_below`` when c <= q and ``exp_above`` otherwise; 1 exactly when
    q == c, and ``missing_sim`` when either value is missing.
    """
    if not (np.isfinite(exp_below) and np.isfinite(exp_above)):
        raise DataError("exponents must be finite")
    if exp_below <= 0 or exp_above <= 0:
        raise DataError("exponents must be positive")
    if np.isnan(q) or np.isnan(c):
        return float(missing_sim)
    if branch_convention == "flipped":
        exp_below, exp_above = exp_above, exp_below
    base = np.maximum((value_range - np.abs(np.float64(q) - np.float64(c))) / value_range, 0.0)
    exponent = exp_below if q >= c else exp_above
    return float(np.power(base, np.float64(exponent)))


def _acbr_block(Q: np.ndarray, R: np.ndarray, model: SimilarityModel) -> np.ndarray:
    below, above = _oriented_exponents(model)
    diff = Q[:, None, :] - R[None, :, :]
    with np.errstate(invalid="ignore"):
        base = np.maximum((model.ranges - np.abs(diff)) / model.ranges, 0.0)
        exps = np.where(diff >= 0, below, above)
        sims = np.power(base, exps)
    missing = np.isnan(Q)[:, None, :] | np.isnan(R)[None, :, :]
    sims = np.where(missing, model.missing_sim, sims)
    w = model.weights.values
    return np.sqrt((w * sims * sims).sum(axis=-1))


def _masked_distances(Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    """|q - c| per slot with missing slots counted as the maximum distance 1."""
    with np.errstate(invalid="ignore"):
        d = np.abs(Q[:, None, :] - R[None, :, :])
    missing = np.isnan(Q)[:, None, :] | np.isnan(R)[None, :, :]
    return np.where(missing, 1.0, d)


def _ecbr_block(Q, R, model):
    wd = model.weights.values * _masked_distances(Q, R)
    return 1.0 / (1.0 + np.sqrt((wd * wd).sum(axis=-1)))


def _mcbr_block(Q, R, model):
    wd = model.weights.values * _masked_distances(Q, R)
    return 1.0 / (1.0 + wd.sum(axis=-1))


def grey_context(query_values: np.ndarray, reference_X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature min and max of |q - c| over the whole reference base."""
    d = _masked_distances(query_values[None, :], reference_X)[0]
    return d.min(axis=0), d.max(axis=0)


def _grey_degrees(dist: np.ndarray, inf: np.ndarray, sup: np.ndarray) -> np.ndarray:
    # sup == 0 forces dist == inf == 0 (extrema cover the full base), degree 1
    num = 2.0 * inf + sup
    den = 2.0 * dist + sup
    with np.errstate(invalid="ignore", divide="ignore"):
        deg = num / den
    return np.where(den == 0.0, 1.0, deg)


def _gcbr_block(Q, R, model):
    d = _masked_distances(Q, R)
    inf = d.min(axis=1)[:, None, :]
    sup = d.max(axis=1)[:, None, :]
    deg = _grey_degrees(d, inf, sup)
    w = model.weights.values
    return (w * deg * deg).sum(axis=-1)


_BLOCKS = {
    "acbr": _acbr_block,
    "ewcbr": _acbr_block,
    "epcbr": _acbr_block,
    "ecbr": _ecbr_block,
    "mcbr": _mcbr_block,
    "gcbr": _gcbr_block,
}


def pair_similarity(
    query_values: np.ndarray, ref_values: np.ndarray, model: SimilarityModel
) -> float:
    """Global similarity of one query/reference pair (asymmetric family).

    The square root of the weighted sum of squared local similarities.
    """
    if model.variant not in ASYMMETRIC_FAMILY:
        raise DataError(f"pair_similarity handles {ASYMMETRIC_FAMILY}, not {model.variant!r}")
    q = np.asarray(query_values, float)
    c = np.asarray(ref_values, float)
    if q.shape != (model.n_features,) or c.shape != (model.n_features,):
        raise DataError("case width does not match model weights")
    return float(_acbr_block(q[None, :], c[None, :], model)[0, 0])


def euclidean_similarity(query_values, ref_values, weights: GlobalWeights) -> float:
    """1 / (1 + weighted Euclidean distance); missing slots count distance 1."""
    model = SimilarityModel(variant="ecbr", weights=weights)
    q = np.asarray(query_values, float)[None, :]
    c = np.asarray(ref_values, float)[None, :]
    return float(_ecbr_block(q, c, model)[0, 0])


def manhattan_similarity(query_values, ref_values, weights: GlobalWeights) -> float:
    """1 / (1 + weighted Manhattan distance); missing slots count distance 1."""
    model = SimilarityModel(variant="mcbr", weights=weights)
    q = np.asarray(query_values, float)[None, :]
    c = np.asarray(ref_values, float)[None, :]
    return float(_mcbr_block(q, c, model)[0, 0])


def grey_similarity(
    query_values,
    ref_values,
    inf: np.ndarray,
    sup: np.ndarray,
    weights: GlobalWeights,
) -> float:
    """Weighted sum of squared grey coefficient degrees.

    ``inf``/``sup`` are the per-feature extremes of |q - c| over the
    reference base for this query (see :func:`grey_context`).
    """
    d = _masked_distances(
        np.asarray(query_values, float)[None, :],
        np.asarray(ref_values, float)[None, :],
    )[0, 0]
    deg = _grey_degrees(d, np.asarray(inf, float), np.asarray(sup, float))
    w = weights.values
    return float((w * deg * deg).sum(axis=-1))


def batch_similarity(
    queries: Dataset,
    references: Dataset,
    model: SimilarityModel,
    workers: int = 1,
) -> np.ndarray:
    """All pairwise similarities as an (n_queries, n_references) matrix.

    Rows are partitioned across ``workers`` threads; each cell is computed
    independently, so the result is identical for every worker count.
    """
    if queries.schema.names != references.schema.names:
        raise DataError("query and reference schemas differ")
    if model.n_features != queries.n_features:
        raise DataError("model width does not match schema")
    return batch_similarity_values(queries.X, references.X, model, workers)


def batch_similarity_values(
    Q: np.ndarray, R: np.ndarray, model: SimilarityModel, workers: int = 1
) -> np.ndarray:
    block = _BLOCKS[model.variant]
    Q = np.asarray(Q, float)
    R = np.asarray(R, float)
    n = Q.shape[0]
    if workers <= 1 or n < 2 * workers:
        return block(Q, R, model)
    out = np.empty((n, R.shape[0]))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def run(span):
        a, b = span
        out[a:b] = block(Q[a:b], R, model)

    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        list(pool.map(run, spans))
    return out


def export_similarity_csv(
    matrix: np.ndarray, query_ids: list[str], ref_ids: list[str], path: str | Path
):
    """Write a similarity matrix as CSV: query ids as rows, reference ids as columns."""
    import csv

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + list(ref_ids))
        for qid, row in zip(query_ids, matrix):
            writer.writerow([qid] + [repr(float(v)) for v in row])
