"""Neighbor retrieval, majority voting, and cross-validated choice of K."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import DataError, Dataset, INSOLVENT, stratified_folds
from .similarity import SimilarityModel, batch_similarity_values

# Odd values only, so binary votes cannot tie.
DEFAULT_K_GRID = tuple(range(1, 26, 2))


@dataclass(frozen=True)
class Neighbor:
    index: int
    id: str
    similarity: float
    label: int


def rank_indices(similarities: np.ndarray) -> np.ndarray:
    """Reference indices in non-increasing similarity; ties keep ascending index."""
    return np.argsort(-np.asarray(similarities, float), kind="stable")


def top_k(
    similarities: np.ndarray,
    labels: np.ndarray,
    k: int,
    ids: Optional[Sequence[str]] = None,
) -> list[Neighbor]:
    """The k most similar references, ordered; deterministic tie handling."""
    sims = np.asarray(similarities, float)
    if not 1 <= k <= sims.size:
        raise DataError(f"k={k} out of range for {sims.size} references")
    order = rank_indices(sims)[:k]
    return [
        Neighbor(
            index=int(i),
            id=ids[i] if ids is not None else str(i),
            similarity=float(sims[i]),
            label=int(labels[i]),
        )
        for i in order
    ]


def majority_vote(neighbors: Sequence[Neighbor]) -> int:
    """Most frequent neighbor label; exact ties resolve to insolvent."""
    if not neighbors:
        raise DataError("cannot vote over zero neighbors")
    votes = sum(n.label for n in neighbors)
    return INSOLVENT if 2 * votes >= len(neighbors) else 0


def vote_labels(sorted_labels: np.ndarray, k: int) -> np.ndarray:
    """Vectorized majority vote over pre-ranked neighbor labels.

    ``sorted_labels`` holds each query's reference labels in retrieval
    order, shape (n_queries, n_references).
    """
    insolvent_votes = sorted_labels[:, :k].sum(axis=1)
    return (2 * insolvent_votes >= k).astype(np.int8)


def select_k(
    train: Dataset,
    model: SimilarityModel,
    k_grid: Sequence[int] = DEFAULT_K_GRID,
    folds: int = 5,
    seed: int = 0,
) -> int:
    """Grid-search K by cross-validated accuracy; ties pick the smallest K.

    Each fold serves once as the query set against the remaining folds as
    the reference base.
    """
    if not k_grid:
        raise DataError("k_grid must be non-empty")
    train.require_labels()
    k_grid = sorted(set(int(k) for k in k_grid))
    if k_grid[0] < 1:
        raise DataError("k values must be positive")
    fold_idx = stratified_folds(train.labels, folds, seed)
    n = len(train)
    min_ref = min(n - f.size for f in fold_idx)
    if k_grid[-1] > min_ref:
        raise DataError(
            f"max k={k_grid[-1]} exceeds smallest reference fold size {min_ref}"
        )
    accuracy = np.zeros(len(k_grid))
    for f in fold_idx:
        ref = np.setdiff1d(np.arange(n), f)
        sims = batch_similarity_values(train.X[f], train.X[ref], model)
        order = np.argsort(-sims, axis=1, kind="stable")
        sorted_labels = train.labels[ref][order]
        truth = train.labels[f]
        for ki, k in enumerate(k_grid):
            preds = vote_labels(sorted_labels, k)
            accuracy[ki] += float((preds == truth).mean())
    accuracy /= len(fold_idx)
    return k_grid[int(np.argmax(accuracy))]


def predict_rows(
    sims: np.ndarray, ref_labels: np.ndarray, k: int
) -> np.ndarray:
    """Vote a label for every query row of a similarity matrix."""
    if sims.shape[1] == 0:
        raise DataError("empty reference base")
    if k > sims.shape[1]:
        raise DataError(f"k={k} exceeds reference count {sims.shape[1]}")
    order = np.argsort(-sims, axis=1, kind="stable")
    return vote_labels(ref_labels[order], k)
