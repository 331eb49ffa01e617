"""Posterior insolvency probability from rank-weighted neighbor votes.

Each retrieval rank i = 1..K carries a probability weight p_i, with an
extra half-vote slot K+1 that keeps estimates away from 0 and 1. The
weights are a softmax over parameters constrained to be non-increasing
across the first K ranks and are fitted by maximizing the likelihood of
correct classification over cross-validated neighbor agreements.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import DataError, Dataset, stratified_folds
from .pso import PSOConfig, pso_optimize
from .retrieval import Neighbor
from .similarity import SimilarityModel, batch_similarity_values

MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class ProbWeights:
    """Softmax rank weights: omega has length K+1, slot K+1 is the regularizer."""

    omega: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, float)
        object.__setattr__(self, "omega", omega)
        if omega.ndim != 1 or omega.size < 2:
            raise DataError("omega must be a vector of length K+1 with K >= 1")
        if not np.isfinite(omega).all():
            raise DataError("omega must be finite")
        head = omega[:-1]
        if (np.diff(head) > MONOTONE_TOL).any():
            raise DataError("omega_1..omega_K must be non-increasing")

    @property
    def k(self) -> int:
        return self.omega.size - 1

    @property
    def probs(self) -> np.ndarray:
        e = np.exp(self.omega - self.omega.max())
        return e / e.sum()

    @classmethod
    def uniform(cls, k: int) -> "ProbWeights":
        return cls(np.zeros(k + 1))

    @classmethod
    def from_free_params(cls, deltas: np.ndarray, tail: float) -> "ProbWeights":
        """Build monotone omega: omega_1 = 0, omega_{i+1} = omega_i - delta_i^2."""
        deltas = np.asarray(deltas, float)
        head = np.concatenate([[0.0], -np.cumsum(deltas * deltas)])
        return cls(np.append(head, tail))

    def to_dict(self) -> dict:
        return {"omega": self.omega.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ProbWeights":
        return cls(np.asarray(d["omega"], float))


def prob_uniform(neighbors: Sequence[Neighbor]) -> float:
    """Insolvent fraction of the retrieved neighbors."""
    if not neighbors:
        raise DataError("cannot estimate a probability from zero neighbors")
    return sum(n.label for n in neighbors) / len(neighbors)


def predict_proba_labels(neighbor_labels: np.ndarray, weights: ProbWeights) -> float:
    """Insolvency probability from ranked neighbor labels.

    Ratio form of the rank-weight estimate: insolvent ranks contribute
    e^omega_i, the regularizer slot contributes half its weight, all over
    the full softmax normalizer.
    """
    labels = np.asarray(neighbor_labels, int)
    if labels.shape != (weights.k,):
        raise DataError(
            f"expected {weights.k} neighbor labels, got {labels.shape}"
        )
    e = np.exp(weights.omega - weights.omega.max())
    num = (e[:-1] * (labels == 1)).sum() + 0.5 * e[-1]
    return float(num / e.sum())


def predict_proba(neighbors: Sequence[Neighbor], weights: ProbWeights) -> float:
    """Insolvency probability for retrieved neighbors in rank order."""
    return predict_proba_labels(np.array([n.label for n in neighbors]), weights)


def log_likelihood(omega: np.ndarray, agreements: np.ndarray) -> float:
    """Log-likelihood of correct classification for an (N, K) agreement matrix.

    ``agreements[n, i]`` is 1 when query n's rank-i neighbor carries the
    query's true label. The regularizer slot always counts half.
    """
    omega = np.asarray(omega, float)
    B = np.asarray(agreements)
    if B.ndim != 2 or B.shape[1] != omega.size - 1:
        raise DataError("agreement matrix width must equal K")
    e = np.exp(omega - omega.max())
    num = B @ e[:-1] + 0.5 * e[-1]
    return float(np.log(num).sum() - B.shape[0] * np.log(e.sum()))


def collect_agreements(
    train: Dataset,
    model: SimilarityModel,
    k: int,
    folds: int = 5,
    seed: int = 0,
) -> np.ndarray:
    """Cross-validated neighbor agreement indicators, one row per case.

    Each fold serves as the query set against the remaining folds, mirroring
    the training cost protocol. Row order follows the input dataset.
    """
    train.require_labels()
    fold_idx = stratified_folds(train.labels, folds, seed)
    n = len(train)
    B = np.zeros((n, k), dtype=np.int8)
    for f in fold_idx:
        ref = np.setdiff1d(np.arange(n), f)
        if ref.size < k:
            raise DataError(f"reference folds too small for K={k}")
        sims = batch_similarity_values(train.X[f], train.X[ref], model)
        order = np.argsort(-sims, axis=1, kind="stable")[:, :k]
        neighbor_labels = train.labels[ref][order]
        B[f] = (neighbor_labels == train.labels[f][:, None]).astype(np.int8)
    return B


def fit_weights_to_agreements(
    agreements: np.ndarray,
    seed: int = 0,
    swarm_size: int = 40,
    iterations: int = 150,
    jobs: int = 1,
) -> ProbWeights:
    """Maximum-likelihood monotone rank weights for an agreement matrix.

    The swarm is seeded at the uniform point, so the fitted likelihood can
    never fall below the uniform-weight likelihood. Falls back to uniform
    weights (with a warning) if optimization fails outright.
    """
    k = int(agreements.shape[1])
    if k < 1:
        raise DataError("need at least one neighbor rank")

    def cost(theta: np.ndarray) -> float:
        pw = ProbWeights.from_free_params(theta[: k - 1], theta[k - 1])
        return -log_likelihood(pw.omega, agreements)

    lower = np.concatenate([np.zeros(k - 1), [-20.0]])
    upper = np.concatenate([np.full(k - 1, np.sqrt(20.0)), [20.0]])
    config = PSOConfig(
        lower=lower,
        upper=upper,
        swarm_size=swarm_size,
        iterations=iterations,
        seed=seed,
        seeded_positions=(np.zeros(k),),
    )
    result = pso_optimize(cost, config, jobs=jobs)
    if not np.isfinite(result.cost):
        warnings.warn("rank-weight fit failed; falling back to uniform weights")
        return ProbWeights.uniform(k)
    return ProbWeights.from_free_params(result.position[: k - 1], result.position[k - 1])


def fit_prob_weights(
    train: Dataset,
    model,
    seed: int = 0,
    folds: int = 5,
    jobs: int = 1,
) -> ProbWeights:
    """Fit rank weights for a trained model on its training base.

    ``model`` needs ``similarity`` and ``k`` attributes (a TrainedModel or
    equivalent); ``train`` should be the scaled reference base.
    """
    agreements = collect_agreements(train, model.similarity, model.k, folds, seed)
    return fit_weights_to_agreements(agreements, seed=seed, jobs=jobs)
