"""End-to-end model design: CV objective, swarm-fitted exponents, method loop.

The design procedure balances the classes, picks K by plain nearest-neighbor
grid search, then fits the asymmetric exponent pair per feature for every
candidate weighting scheme and keeps the best cross-validated combination.
A particle pinned at unit exponents guarantees the fitted model never scores
below its unit-exponent (equal-polynomial) counterpart.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import (
    DataError,
    Dataset,
    FeatureSchema,
    ScalingParams,
    apply_scaler,
    fit_scaler,
    random_undersample,
    scale_values,
    stratified_folds,
)
from .metrics import METRIC_KEYS, compute_metrics, confusion
from .pso import PSOConfig, PSOResult, pso_optimize
from .probability import ProbWeights, predict_proba_labels
from .retrieval import DEFAULT_K_GRID, Neighbor, select_k, top_k, vote_labels
from .similarity import (
    GlobalWeights,
    LocalParams,
    SimilarityModel,
    batch_similarity_values,
)
from .weighting import SCORING_METHODS, ScoringMethod, score_features

EXPONENT_BOUNDS = (0.1, 10.0)

# component-specific RNG streams derived from one training seed
_SEED_STREAMS = {"undersample": 1, "k": 2, "cv": 3, "pso": 4, "prob": 5, "score": 6}


def derive_seed(base: int, component: str) -> int:
    return int(np.random.default_rng([_SEED_STREAMS[component], base]).integers(2**31))


def metric_to_cost(value: float, metric: str) -> float:
    """Map a maximized metric into the minimized PSO cost in [0, 1]."""
    if metric == "mcc":
        return 1.0 - (value + 1.0) / 2.0
    return 1.0 - value


def cost_to_metric(cost: float, metric: str) -> float:
    if metric == "mcc":
        return (1.0 - cost) * 2.0 - 1.0
    return 1.0 - cost


@dataclass(frozen=True)
class TrainingConfig:
    scoring_methods: tuple[str, ...] = SCORING_METHODS
    metric: str = "accuracy"
    folds: int = 5
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    swarm_size: int = 30
    pso_iterations: int = 100
    exponent_bounds: tuple[float, float] = EXPONENT_BOUNDS
    missing_sim: float = 0.0
    branch_convention: str = "standard"
    undersample: bool = True
    bins: int = 10
    jobs: int = 1

    def __post_init__(self):
        if self.metric not in METRIC_KEYS:
            raise DataError(f"unknown training metric {self.metric!r}")
        for m in self.scoring_methods:
            if m not in SCORING_METHODS:
                raise DataError(f"unknown scoring method {m!r}")
        if not self.scoring_methods:
            raise DataError("need at least one scoring method")


class CVPlan:
    """Frozen cross-validation folds over a scaled base, reused across
    many objective evaluations so the PSO cost is a fixed function.

    Per-fold difference tensors are cached when they fit a size budget.
    """

    def __init__(
        self,
        train: Dataset,
        folds: int = 5,
        seed: int = 0,
        cache_limit: float = 2.5e7,
    ):
        train.require_labels()
        self.data = train
        self.fold_idx = stratified_folds(train.labels, folds, seed)
        self.seed = seed
        self._parts = []
        total = 0
        n = len(train)
        for f in self.fold_idx:
            ref = np.setdiff1d(np.arange(n), f)
            total += f.size * ref.size * train.n_features
            self._parts.append((f, ref))
        self._cache = None
        if total <= cache_limit:
            self._cache = []
            for f, ref in self._parts:
                diff = train.X[f][:, None, :] - train.X[ref][None, :, :]
                with np.errstate(invalid="ignore"):
                    base = np.maximum((1.0 - np.abs(diff)) / 1.0, 0.0)
                    use_below = diff >= 0
                missing = np.isnan(train.X[f])[:, None, :] | np.isnan(train.X[ref])[None, :, :]
                self._cache.append(
                    (base, use_below, missing if missing.any() else None)
                )

    def _fold_sims(self, part_i: int, model: SimilarityModel) -> np.ndarray:
        f, ref = self._parts[part_i]
        if model.variant in ("acbr", "ewcbr", "epcbr") and self._cache is not None:
            base, use_below, missing = self._cache[part_i]
            below, above = model.local.below, model.local.above
            if model.branch_convention == "flipped":
                below, above = above, below
            exps = np.where(use_below, below, above)
            sims = np.power(base, exps)
            if missing is not None:
                sims = np.where(missing, model.missing_sim, sims)
            w = model.weights.values
            return np.sqrt((w * sims * sims).sum(axis=-1))
        return batch_similarity_values(self.data.X[f], self.data.X[ref], model)

    def score(self, model: SimilarityModel, k: int, metric: str) -> float:
        """Mean per-fold metric with each fold serving once as the query set."""
        values = []
        for i, (f, ref) in enumerate(self._parts):
            if ref.size < k:
                raise DataError(f"K={k} exceeds fold reference size {ref.size}")
            sims = self._fold_sims(i, model)
            order = np.argsort(-sims, axis=1, kind="stable")
            preds = vote_labels(self.data.labels[ref][order], k)
            rep = compute_metrics(confusion(preds, self.data.labels[f]))
            values.append(rep.value(metric))
        return float(np.mean(values))


def cv_cost(
    local: Optional[LocalParams],
    weights: GlobalWeights,
    k: int,
    train: Dataset,
    folds: int = 5,
    metric: str = "accuracy",
    seed: int = 0,
    variant: str = "acbr",
    missing_sim: float = 0.0,
    branch_convention: str = "standard",
) -> float:
    """Cross-validated metric for one similarity configuration.

    ``train`` must already be scaled. Deterministic for a given seed: the
    fold assignment is the only random element.
    """
    if metric not in METRIC_KEYS:
        raise DataError(f"unknown metric {metric!r}")
    model = SimilarityModel(
        variant=variant,
        weights=weights,
        local=local,
        missing_sim=missing_sim,
        branch_convention=branch_convention,
    )
    plan = CVPlan(train, folds=folds, seed=seed)
    return plan.score(model, k, metric)


@dataclass
class MethodResult:
    method: str
    weights: GlobalWeights
    local: LocalParams
    cv_score: float
    pso: Optional[PSOResult] = None


@dataclass
class TrainedModel:
    """A designed retrieval model plus everything needed to apply it."""

    schema: FeatureSchema
    scaler: ScalingParams
    similarity: SimilarityModel
    k: int
    scoring_method: str
    training_metric: str
    cv_score: float
    reference: Dataset  # raw (unscaled) retained case base
    candidate_scores: dict = field(default_factory=dict)
    prob_weights: Optional[ProbWeights] = None
    seeds: dict = field(default_factory=dict)
    log: list = field(default_factory=list)

    def __post_init__(self):
        self._scaled_ref = None

    @property
    def reference_scaled(self) -> np.ndarray:
        if self._scaled_ref is None:
            self._scaled_ref = apply_scaler(self.reference, self.scaler).X
        return self._scaled_ref

    def scale_case(self, values: np.ndarray) -> np.ndarray:
        return scale_values(np.asarray(values, float), self.scaler)

    def insolvent_prior(self) -> float:
        """Insolvent share of the reference base (the empty-model baseline)."""
        return float((self.reference.labels == 1).mean())

    def similarity_row(
        self, raw_values: np.ndarray, exclude_id: Optional[str] = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """(similarities, candidate indices) of one query against the base."""
        q = self.scale_case(raw_values)[None, :]
        sims = batch_similarity_values(q, self.reference_scaled, self.similarity)[0]
        idx = np.arange(len(self.reference))
        if exclude_id is not None:
            keep = np.array([i for i in idx if self.reference.ids[i] != exclude_id])
            if keep.size == 0:
                raise DataError("self-exclusion removed every reference")
            return sims[keep], keep
        return sims, idx

    def neighbors(
        self, raw_values: np.ndarray, k: Optional[int] = None,
        exclude_id: Optional[str] = None,
    ) -> list[Neighbor]:
        k = self.k if k is None else k
        sims, idx = self.similarity_row(raw_values, exclude_id)
        found = top_k(
            sims,
            self.reference.labels[idx],
            k,
            ids=[self.reference.ids[i] for i in idx],
        )
        # map positions back to base indices after exclusion filtering
        return [
            Neighbor(index=int(idx[n.index]), id=n.id, similarity=n.similarity, label=n.label)
            for n in found
        ]

    def predict_values(
        self,
        raw_values: np.ndarray,
        exclude_id: Optional[str] = None,
        prob_weights: Optional[ProbWeights] = None,
    ) -> tuple[int, float, list[Neighbor]]:
        """(voted label, insolvency probability, ranked neighbors)."""
        nbrs = self.neighbors(raw_values, exclude_id=exclude_id)
        votes = sum(n.label for n in nbrs)
        label = 1 if 2 * votes >= len(nbrs) else 0
        pw = prob_weights if prob_weights is not None else self.prob_weights
        if pw is not None:
            proba = predict_proba_labels(np.array([n.label for n in nbrs]), pw)
        else:
            proba = votes / len(nbrs)
        return label, float(proba), nbrs

    def predict_case(self, case) -> int:
        """Voted class for one case (0 solvent, 1 insolvent)."""
        return self.predict_values(case.values)[0]

    def predict_dataset(
        self, data: Dataset, workers: int = 1
    ) -> tuple[np.ndarray, np.ndarray, list[list[Neighbor]]]:
        if data.schema.names != self.schema.names:
            raise DataError("query schema does not match the model")
        scaled = apply_scaler(data, self.scaler)
        sims = batch_similarity_values(
            scaled.X, self.reference_scaled, self.similarity, workers=workers
        )
        labels = np.empty(len(data), dtype=np.int8)
        probas = np.empty(len(data))
        all_neighbors = []
        ref_labels = self.reference.labels
        for i in range(len(data)):
            nbrs = top_k(sims[i], ref_labels, self.k, ids=self.reference.ids)
            votes = sum(n.label for n in nbrs)
            labels[i] = 1 if 2 * votes >= self.k else 0
            if self.prob_weights is not None:
                probas[i] = predict_proba_labels(
                    np.array([n.label for n in nbrs]), self.prob_weights
                )
            else:
                probas[i] = votes / self.k
            all_neighbors.append(nbrs)
        return labels, probas, all_neighbors


def design_acbr(
    train: Dataset, config: TrainingConfig = TrainingConfig(), seed: int = 0
) -> TrainedModel:
    """Run the full design loop on a raw labeled training set.

    Steps: undersample, fit the scaler, pick K by nearest-neighbor grid
    search, then per scoring method fit exponents by PSO against the
    cross-validated metric; the best-validated combination wins. Ties keep
    the earlier method in ``config.scoring_methods`` order.
    """
    train.require_labels()
    seeds = {name: derive_seed(seed, name) for name in _SEED_STREAMS}
    base = random_undersample(train, seeds["undersample"]) if config.undersample else train
    scaler = fit_scaler(base)
    scaled = apply_scaler(base, scaler)
    L = scaled.n_features

    knn_model = SimilarityModel(variant="ecbr", weights=GlobalWeights.uniform(L))
    k = select_k(
        scaled, knn_model, k_grid=config.k_grid, folds=config.folds, seed=seeds["k"]
    )

    plan = CVPlan(scaled, folds=config.folds, seed=seeds["cv"])
    lo, hi = config.exponent_bounds
    log = [f"undersampled base: {len(base)} cases", f"selected K={k}"]
    results: list[MethodResult] = []
    for mi, method_tag in enumerate(config.scoring_methods):
        method = ScoringMethod(tag=method_tag, bins=config.bins, seed=seeds["score"])
        weights = score_features(scaled, method)

        def objective(theta: np.ndarray) -> float:
            local = LocalParams(below=theta[:L], above=theta[L:])
            model = SimilarityModel(
                variant="acbr",
                weights=weights,
                local=local,
                missing_sim=config.missing_sim,
                branch_convention=config.branch_convention,
            )
            return metric_to_cost(plan.score(model, k, config.metric), config.metric)

        pso_config = PSOConfig(
            lower=np.full(2 * L, lo),
            upper=np.full(2 * L, hi),
            swarm_size=config.swarm_size,
            iterations=config.pso_iterations,
            seed=seeds["pso"] + mi,
            seeded_positions=(np.ones(2 * L),),
        )
        result = pso_optimize(objective, pso_config, jobs=config.jobs)
        local = LocalParams(below=result.position[:L], above=result.position[L:])
        model = SimilarityModel(
            variant="acbr",
            weights=weights,
            local=local,
            missing_sim=config.missing_sim,
            branch_convention=config.branch_convention,
        )
        score = plan.score(model, k, config.metric)
        results.append(
            MethodResult(method=method_tag, weights=weights, local=local,
                         cv_score=score, pso=result)
        )
        log.append(f"{method_tag}: CV {config.metric} = {score:.6f}")

    best = max(results, key=lambda r: r.cv_score)
    log.append(f"selected scoring method: {best.method}")
    similarity = SimilarityModel(
        variant="acbr",
        weights=best.weights,
        local=best.local,
        missing_sim=config.missing_sim,
        branch_convention=config.branch_convention,
    )
    return TrainedModel(
        schema=train.schema,
        scaler=scaler,
        similarity=similarity,
        k=k,
        scoring_method=best.method,
        training_metric=config.metric,
        cv_score=best.cv_score,
        reference=base,
        candidate_scores={r.method: r.cv_score for r in results},
        seeds=seeds,
        log=log,
    )


def train_variant(
    train: Dataset,
    variant: str,
    config: TrainingConfig = TrainingConfig(),
    seed: int = 0,
) -> TrainedModel:
    """Train any similarity variant under the shared design protocol.

    The asymmetric variant runs the full exponent search; the others keep
    unit/no exponents and only pick the best-scoring weighting (none for
    the equally-weighted baseline). K selection, balancing and folds are
    identical across variants so comparisons are like for like.
    """
    if variant == "acbr":
        return design_acbr(train, config, seed=seed)
    train.require_labels()
    seeds = {name: derive_seed(seed, name) for name in _SEED_STREAMS}
    base = random_undersample(train, seeds["undersample"]) if config.undersample else train
    scaler = fit_scaler(base)
    scaled = apply_scaler(base, scaler)
    L = scaled.n_features
    knn_model = SimilarityModel(variant="ecbr", weights=GlobalWeights.uniform(L))
    k = select_k(
        scaled, knn_model, k_grid=config.k_grid, folds=config.folds, seed=seeds["k"]
    )
    plan = CVPlan(scaled, folds=config.folds, seed=seeds["cv"])

    def build(weights: GlobalWeights) -> SimilarityModel:
        return SimilarityModel(
            variant=variant,
            weights=weights,
            local=LocalParams.unit(L) if variant in ("ewcbr", "epcbr") else None,
            missing_sim=config.missing_sim,
            branch_convention=config.branch_convention,
        )

    candidates: dict[str, float] = {}
    if variant == "ewcbr":
        weights_by_method = {"uniform": GlobalWeights.uniform(L)}
    else:
        weights_by_method = {
            tag: score_features(scaled, ScoringMethod(tag=tag, bins=config.bins,
                                                      seed=seeds["score"]))
            for tag in config.scoring_methods
        }
    best_method, best_weights, best_score = None, None, -np.inf
    for tag, weights in weights_by_method.items():
        score = plan.score(build(weights), k, config.metric)
        candidates[tag] = score
        if score > best_score:
            best_method, best_weights, best_score = tag, weights, score
    return TrainedModel(
        schema=train.schema,
        scaler=scaler,
        similarity=build(best_weights),
        k=k,
        scoring_method=best_method,
        training_metric=config.metric,
        cv_score=float(best_score),
        reference=base,
        candidate_scores=candidates,
        seeds=seeds,
        log=[f"variant {variant}: CV {config.metric} = {best_score:.6f}"],
    )
