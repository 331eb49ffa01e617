"""Prediction explanations: neighbors, Shapley attributions, what-if paths.

Feature attributions treat the predicted insolvency probability as the payoff
of a coalition game over features. A restricted model keeps the trained
exponents, K and rank weights but renormalizes the global weights over the
active subset; the empty coalition falls back to the insolvent share of the
reference base. This subset semantics is an approximation (no per-subset
retraining) and is stated in every report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import DataError, Dataset
from .probability import ProbWeights, predict_proba_labels
from .retrieval import rank_indices
from .similarity import (
    ASYMMETRIC_FAMILY,
    SimilarityModel,
    _grey_degrees,
    _masked_distances,
    _oriented_exponents,
)
from .training import TrainedModel

SUBSET_SEMANTICS_NOTE = (
    "restricted models renormalize the trained feature weights over the "
    "active subset; exponents, K, rank weights and the reference base stay fixed"
)

EXACT_LIMIT = 15
DEFAULT_MC_SAMPLES = 5000


class SubsetEvaluator:
    """Insolvency probability of one query under any feature subset.

    Per-feature local terms against the whole reference base are computed
    once; each subset evaluation is then a weighted aggregation, retrieval
    and rank-weighted vote. Subsets with zero total weight fall back to the
    base-rate baseline, which makes zero-weight features exact dummies.
    """

    def __init__(
        self,
        model: TrainedModel,
        prob_weights: Optional[ProbWeights],
        query_values: np.ndarray,
        exclude_id: Optional[str] = None,
    ):
        self.model = model
        self.prob_weights = prob_weights
        q = model.scale_case(np.asarray(query_values, float))
        keep = np.arange(len(model.reference))
        if exclude_id is not None:
            keep = np.array(
                [i for i in keep if model.reference.ids[i] != exclude_id], dtype=int
            )
            if keep.size == 0:
                raise DataError("self-exclusion removed every reference")
        R = model.reference_scaled[keep]
        self.labels = model.reference.labels[keep]
        self.baseline = float((self.labels == 1).mean())
        self.weights = model.similarity.weights.values
        sim = model.similarity
        self.variant = sim.variant
        if sim.variant in ASYMMETRIC_FAMILY:
            below, above = _oriented_exponents(sim)
            diff = q[None, :] - R
            with np.errstate(invalid="ignore"):
                base = np.maximum((sim.ranges - np.abs(diff)) / sim.ranges, 0.0)
                terms = np.power(base, np.where(diff >= 0, below, above))
            missing = np.isnan(q)[None, :] | np.isnan(R)
            self.terms = np.where(missing, sim.missing_sim, terms)
        elif sim.variant in ("ecbr", "mcbr"):
            self.terms = _masked_distances(q[None, :], R)[0]
        else:  # gcbr
            d = _masked_distances(q[None, :], R)[0]
            inf = d.min(axis=0)
            sup = d.max(axis=0)
            self.terms = _grey_degrees(d, inf, sup)

    def value(self, mask: np.ndarray) -> float:
        """Probability using only the masked features."""
        mask = np.asarray(mask, bool)
        wsum = self.weights[mask].sum() if mask.any() else 0.0
        if wsum <= 0.0:
            return self.baseline
        w = np.where(mask, self.weights, 0.0) / wsum
        T = self.terms
        if self.variant in ASYMMETRIC_FAMILY:
            scores = np.sqrt((w * T * T).sum(axis=-1))
        elif self.variant == "ecbr":
            wd = w * T
            scores = 1.0 / (1.0 + np.sqrt((wd * wd).sum(axis=-1)))
        elif self.variant == "mcbr":
            scores = 1.0 / (1.0 + (w * T).sum(axis=-1))
        else:
            scores = (w * T * T).sum(axis=-1)
        order = rank_indices(scores)[: self.model.k]
        ranked = self.labels[order]
        if self.prob_weights is not None:
            return predict_proba_labels(ranked, self.prob_weights)
        return float((ranked == 1).mean())


def restricted_predict_proba(
    query_values: np.ndarray,
    subset: Sequence[int],
    model: TrainedModel,
    prob_weights: Optional[ProbWeights] = None,
    exclude_id: Optional[str] = None,
) -> float:
    """Probability from the model restricted to ``subset`` feature indices."""
    L = model.schema.n_features
    mask = np.zeros(L, bool)
    for j in subset:
        if not 0 <= j < L:
            raise DataError(f"feature index {j} out of range")
        mask[j] = True
    ev = SubsetEvaluator(model, prob_weights, query_values, exclude_id)
    return ev.value(mask)


@dataclass
class ShapleyResult:
    values: np.ndarray  # (L,) probability units
    baseline: float
    full: float
    mode: str  # "exact" | "monte_carlo"
    samples: Optional[int] = None
    seed: Optional[int] = None
    stderr: Optional[np.ndarray] = None

    @property
    def efficiency_residual(self) -> float:
        return float(self.full - self.baseline - self.values.sum())

    def ranking(self) -> np.ndarray:
        """Feature indices by descending absolute attribution."""
        return np.argsort(-np.abs(self.values), kind="stable")

    def to_dict(self) -> dict:
        return {
            "values": self.values.tolist(),
            "baseline": self.baseline,
            "full": self.full,
            "mode": self.mode,
            "samples": self.samples,
            "seed": self.seed,
            "stderr": self.stderr.tolist() if self.stderr is not None else None,
            "efficiency_residual": self.efficiency_residual,
        }


def shapley_exact(
    query_values: np.ndarray,
    model: TrainedModel,
    prob_weights: Optional[ProbWeights] = None,
    exact_limit: int = EXACT_LIMIT,
    exclude_id: Optional[str] = None,
) -> ShapleyResult:
    """Exact attributions by full subset enumeration (2^L evaluations)."""
    L = model.schema.n_features
    if L > exact_limit:
        raise DataError(
            f"{L} features exceed the exact enumeration limit {exact_limit}; "
            "use the monte_carlo mode"
        )
    ev = SubsetEvaluator(model, prob_weights, query_values, exclude_id)
    n_masks = 1 << L
    v = np.empty(n_masks)
    bits = np.zeros(L, bool)
    for mask in range(n_masks):
        for j in range(L):
            bits[j] = (mask >> j) & 1
        v[mask] = ev.value(bits)
    fact = [math.factorial(s) * math.factorial(L - s - 1) / math.factorial(L) for s in range(L)]
    popcount = np.array([bin(m).count("1") for m in range(n_masks)])
    values = np.zeros(L)
    for j in range(L):
        bit = 1 << j
        for mask in range(n_masks):
            if mask & bit:
                continue
            values[j] += fact[popcount[mask]] * (v[mask | bit] - v[mask])
    return ShapleyResult(
        values=values, baseline=v[0], full=v[n_masks - 1], mode="exact"
    )


def shapley_mc(
    query_values: np.ndarray,
    model: TrainedModel,
    prob_weights: Optional[ProbWeights] = None,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    exclude_id: Optional[str] = None,
) -> ShapleyResult:
    """Permutation-sampling attribution estimate with per-feature standard errors.

    Each sampled feature ordering contributes one marginal-gain telescope, so
    efficiency holds per permutation and in the aggregate.
    """
    if samples < 1:
        raise DataError("samples must be positive")
    L = model.schema.n_features
    ev = SubsetEvaluator(model, prob_weights, query_values, exclude_id)
    rng = np.random.default_rng(seed)
    perms = [rng.permutation(L) for _ in range(samples)]
    sums = np.zeros(L)
    sq_sums = np.zeros(L)
    mask = np.zeros(L, bool)
    for perm in perms:
        mask[:] = False
        prev = ev.baseline
        for j in perm:
            mask[j] = True
            cur = ev.value(mask)
            gain = cur - prev
            sums[j] += gain
            sq_sums[j] += gain * gain
            prev = cur
    values = sums / samples
    if samples >= 2:
        var = (sq_sums - samples * values * values) / (samples - 1)
        stderr = np.sqrt(np.maximum(var, 0.0) / samples)
    else:
        stderr = None
    full = ev.value(np.ones(L, bool))
    return ShapleyResult(
        values=values,
        baseline=ev.baseline,
        full=full,
        mode="monte_carlo",
        samples=samples,
        seed=seed,
        stderr=stderr,
    )


def mean_abs_shapley(
    data: Dataset,
    model: TrainedModel,
    prob_weights: Optional[ProbWeights] = None,
    mode: str = "auto",
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> list[tuple[int, str, float]]:
    """Mean |attribution| per feature over a dataset, sorted descending.

    Returns (feature index, feature name, mean absolute value) triples.
    """
    L = model.schema.n_features
    if mode == "auto":
        mode = "exact" if L <= EXACT_LIMIT else "monte_carlo"
    totals = np.zeros(L)
    for i in range(len(data)):
        if mode == "exact":
            res = shapley_exact(data.X[i], model, prob_weights)
        else:
            res = shapley_mc(data.X[i], model, prob_weights, samples=samples, seed=seed + i)
        totals += np.abs(res.values)
    means = totals / len(data)
    order = np.argsort(-means, kind="stable")
    return [(int(j), model.schema.names[j], float(means[j])) for j in order]


@dataclass
class NeighborTable:
    query_id: str
    neighbor_ids: list[str]
    neighbor_labels: list[int]
    similarities: list[float]
    feature_rows: list[dict]  # name, unit, query value, per-neighbor values
    derived_rows: list[dict]  # e.g. profit margin, values may be None

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "neighbor_ids": self.neighbor_ids,
            "neighbor_labels": self.neighbor_labels,
            "similarities": self.similarities,
            "features": self.feature_rows,
            "derived": self.derived_rows,
        }


def profit_margin(values: np.ndarray, schema) -> Optional[float]:
    """Net income / sales in percent, when both inputs are usable."""
    try:
        j_sales = schema.index_of("Sales")
        j_net = schema.index_of("Net income")
    except KeyError:
        return None
    sales, net = values[j_sales], values[j_net]
    if np.isnan(sales) or np.isnan(net) or sales == 0:
        return None
    return float(net / sales * 100.0)


def explain_neighbors(
    query_values: np.ndarray,
    model: TrainedModel,
    k: Optional[int] = None,
    query_id: str = "Q",
    exclude_id: Optional[str] = None,
) -> NeighborTable:
    """Query-vs-neighbor comparison in original (unscaled) units."""
    k = model.k if k is None else k
    if k > model.k:
        raise DataError(f"k={k} exceeds the model's K={model.k}")
    nbrs = model.neighbors(np.asarray(query_values, float), k=k, exclude_id=exclude_id)
    schema = model.schema
    ref_X = model.reference.X
    rows = []
    for j in range(schema.n_features):
        rows.append(
            {
                "name": schema.names[j],
                "unit": schema.units[j] if schema.units else "",
                "query": None if np.isnan(query_values[j]) else float(query_values[j]),
                "neighbors": [
                    None if np.isnan(ref_X[n.index, j]) else float(ref_X[n.index, j])
                    for n in nbrs
                ],
            }
        )
    derived = []
    margins = [profit_margin(np.asarray(query_values, float), schema)] + [
        profit_margin(ref_X[n.index], schema) for n in nbrs
    ]
    if any(m is not None for m in margins):
        derived.append(
            {"name": "Profit margin (%)", "query": margins[0], "neighbors": margins[1:]}
        )
    return NeighborTable(
        query_id=query_id,
        neighbor_ids=[n.id for n in nbrs],
        neighbor_labels=[n.label for n in nbrs],
        similarities=[n.similarity for n in nbrs],
        feature_rows=rows,
        derived_rows=derived,
    )


@dataclass
class WhatIfTrajectory:
    """Probabilities as base-case features are cumulatively replaced."""

    base_id: str
    target_id: str
    ordering: list[int]
    feature_names: list[str]
    probabilities: list[float]  # length = len(ordering) + 1

    def to_dict(self) -> dict:
        return {
            "base_id": self.base_id,
            "target_id": self.target_id,
            "ordering": self.ordering,
            "feature_names": self.feature_names,
            "probabilities": self.probabilities,
        }


def whatif_accumulate(
    base_values: np.ndarray,
    target_values: np.ndarray,
    model: TrainedModel,
    prob_weights: Optional[ProbWeights] = None,
    ordering: Optional[Sequence[int]] = None,
    base_id: str = "base",
    target_id: str = "target",
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> WhatIfTrajectory:
    """Replace base features with target values step by step.

    Step t is the full-model prediction for the hybrid case with the first
    t features of ``ordering`` replaced. Without an explicit ordering the
    features follow the mean-|attribution| ranking of the base case.
    """
    base_values = np.asarray(base_values, float)
    target_values = np.asarray(target_values, float)
    L = model.schema.n_features
    pw = prob_weights if prob_weights is not None else model.prob_weights
    if ordering is None:
        single = Dataset(
            schema=model.schema, ids=[base_id], X=base_values[None, :],
            labels=np.array([-1], dtype=np.int8),
        )
        ranking = mean_abs_shapley(single, model, pw, samples=samples, seed=seed)
        ordering = [j for j, _, _ in ranking]
    ordering = [int(j) for j in ordering]
    if len(set(ordering)) != len(ordering):
        raise DataError("ordering contains duplicate features")
    for j in ordering:
        if not 0 <= j < L:
            raise DataError(f"feature index {j} out of range")

    probs = []
    hybrid = base_values.copy()
    # every step goes through the standard full-model prediction path
    probs.append(model.predict_values(hybrid, prob_weights=pw)[1])
    for j in ordering:
        hybrid[j] = target_values[j]
        probs.append(model.predict_values(hybrid, prob_weights=pw)[1])
    return WhatIfTrajectory(
        base_id=base_id,
        target_id=target_id,
        ordering=ordering,
        feature_names=[model.schema.names[j] for j in ordering],
        probabilities=probs,
    )


def local_function_curve(
    model: SimilarityModel | TrainedModel, feature: int, points: int = 201
) -> tuple[np.ndarray, np.ndarray]:
    """Sampled local similarity vs. the signed value difference (ref - query).

    Returns (differences in [-1, 1], similarity values) under the model's
    exponent pair for ``feature``.
    """
    sim = model.similarity if isinstance(model, TrainedModel) else model
    if sim.local is None:
        raise DataError(f"variant {sim.variant!r} has no local exponent curve")
    L = sim.n_features
    if not 0 <= feature < L:
        raise DataError(f"feature index {feature} out of range")
    from .similarity import local_similarity

    deltas = np.linspace(-1.0, 1.0, points)
    values = np.empty(points)
    below = float(sim.local.below[feature])
    above = float(sim.local.above[feature])
    for i, d in enumerate(deltas):
        q, c = (-d, 0.0) if d < 0 else (0.0, d)
        values[i] = local_similarity(
            q, c, below, above, branch_convention=sim.branch_convention
        )
    return deltas, values


@dataclass
class ExplanationReport:
    query_id: str
    predicted_label: int
    probability: float
    neighbors: NeighborTable
    relevance_percent: list[float]
    shapley: Optional[ShapleyResult] = None
    whatif: Optional[WhatIfTrajectory] = None
    note: str = SUBSET_SEMANTICS_NOTE

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "predicted_label": self.predicted_label,
            "probability": self.probability,
            "neighbors": self.neighbors.to_dict(),
            "relevance_percent": self.relevance_percent,
            "shapley": self.shapley.to_dict() if self.shapley else None,
            "whatif": self.whatif.to_dict() if self.whatif else None,
            "note": self.note,
        }


def build_report(
    query_values: np.ndarray,
    model: TrainedModel,
    query_id: str = "Q",
    shapley_mode: Optional[str] = None,  # None | "exact" | "monte_carlo"
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    whatif_target: Optional[np.ndarray] = None,
    whatif_target_id: str = "target",
    whatif_ordering: Optional[Sequence[int]] = None,
    exclude_id: Optional[str] = None,
) -> ExplanationReport:
    """Assemble the full explanation for one query case."""
    label, proba, _ = model.predict_values(
        np.asarray(query_values, float), exclude_id=exclude_id
    )
    table = explain_neighbors(
        query_values, model, query_id=query_id, exclude_id=exclude_id
    )
    shap = None
    if shapley_mode == "exact":
        shap = shapley_exact(query_values, model, model.prob_weights, exclude_id=exclude_id)
    elif shapley_mode == "monte_carlo":
        shap = shapley_mc(
            query_values, model, model.prob_weights,
            samples=samples, seed=seed, exclude_id=exclude_id,
        )
    whatif = None
    if whatif_target is not None:
        ordering = whatif_ordering
        if ordering is None and shap is not None:
            ordering = [int(j) for j in shap.ranking()]
        whatif = whatif_accumulate(
            query_values, whatif_target, model,
            ordering=ordering, base_id=query_id, target_id=whatif_target_id,
            samples=samples, seed=seed,
        )
    return ExplanationReport(
        query_id=query_id,
        predicted_label=int(label),
        probability=float(proba),
        neighbors=table,
        relevance_percent=(model.similarity.weights.values * 100.0).tolist(),
        shapley=shap,
        whatif=whatif,
    )
