"""Explainable case-based insolvency prediction.

Classifies companies by retrieving the most similar labeled cases under a
learned asymmetric similarity measure, reports calibrated insolvency
probabilities, and explains predictions through neighbors, feature
relevance, Shapley attributions and what-if trajectories.
"""

from .dataset import (
    Case,
    DataError,
    Dataset,
    FeatureSchema,
    ScalingParams,
    apply_scaler,
    financial_statement_schema,
    fit_scaler,
    load_csv,
    random_undersample,
    save_csv,
    stratified_split,
)
from .metrics import Confusion, MetricReport, compute_metrics, confusion, roc_auc
from .probability import ProbWeights, fit_prob_weights, predict_proba, prob_uniform
from .pso import PSOConfig, PSOResult, pso_optimize
from .retrieval import Neighbor, majority_vote, select_k, top_k
from .similarity import (
    GlobalWeights,
    LocalParams,
    SimilarityModel,
    batch_similarity,
    local_similarity,
    pair_similarity,
)
from .synth import SynthConfig, synth_generate
from .training import TrainedModel, TrainingConfig, cv_cost, design_acbr
from .weighting import ScoringMethod, relevance_percent, score_features

__version__ = "0.1.0"
