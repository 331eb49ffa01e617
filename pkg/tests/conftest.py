import numpy as np
import pytest

from cbrisk.dataset import Dataset, FeatureSchema, fit_scaler
from cbrisk.similarity import GlobalWeights, LocalParams, SimilarityModel
from cbrisk.training import TrainedModel


def make_dataset(X, labels, schema=None, ids=None):
    X = np.asarray(X, float)
    schema = schema or FeatureSchema.generic(X.shape[1])
    return Dataset(
        schema=schema,
        ids=ids or [f"c{i}" for i in range(X.shape[0])],
        X=X,
        labels=np.asarray(labels, dtype=np.int8),
    )


def make_separable(n_per_class=30, n_features=3, seed=0):
    """Two well-separated clusters: solvent near 1, insolvent near 0."""
    rng = np.random.default_rng(seed)
    lo = rng.uniform(0.0, 0.15, size=(n_per_class, n_features))
    hi = rng.uniform(0.85, 1.0, size=(n_per_class, n_features))
    X = np.vstack([hi, lo])
    labels = np.array([0] * n_per_class + [1] * n_per_class)
    return make_dataset(X, labels)


def make_model(
    reference: Dataset,
    k: int = 3,
    weights=None,
    below=None,
    above=None,
    variant: str = "acbr",
    prob_weights=None,
    missing_sim: float = 0.0,
):
    """Assemble a TrainedModel directly (no design loop) for fast tests."""
    L = reference.n_features
    w = GlobalWeights(np.asarray(weights, float)) if weights is not None else GlobalWeights.uniform(L)
    local = None
    if variant in ("acbr", "ewcbr", "epcbr"):
        local = LocalParams(
            below=np.asarray(below, float) if below is not None else np.ones(L),
            above=np.asarray(above, float) if above is not None else np.ones(L),
        )
    sim = SimilarityModel(
        variant=variant, weights=w, local=local, missing_sim=missing_sim
    )
    return TrainedModel(
        schema=reference.schema,
        scaler=fit_scaler(reference),
        similarity=sim,
        k=k,
        scoring_method="gini",
        training_metric="accuracy",
        cv_score=0.0,
        reference=reference,
        prob_weights=prob_weights,
        seeds={},
        log=[],
    )


@pytest.fixture
def balanced_base():
    rng = np.random.default_rng(7)
    X = rng.random((40, 4))
    labels = np.array([0, 1] * 20)
    return make_dataset(X, labels)
