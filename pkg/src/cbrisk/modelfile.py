"""Versioned on-disk model format (JSON text, exact round-trip).

The file embeds the retained reference case base so a saved model is fully
self-contained for prediction and explanation. Serialization is canonical
(sorted keys, repr-precision floats), so identical models produce
byte-identical files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .dataset import DataError, Dataset, FeatureSchema, ScalingParams
from .probability import ProbWeights
from .similarity import GlobalWeights, LocalParams, SimilarityModel
from .training import TrainedModel

FORMAT_NAME = "cbrisk-model"
FORMAT_VERSION = 1


def _matrix_to_lists(X: np.ndarray) -> list:
    return [[None if math.isnan(v) else v for v in row] for row in X.tolist()]


def _lists_to_matrix(rows: list) -> np.ndarray:
    return np.array(
        [[np.nan if v is None else float(v) for v in row] for row in rows], dtype=float
    )


def model_to_dict(model: TrainedModel) -> dict:
    from .weighting import weights_table

    sim = model.similarity
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "relevance_table": weights_table(model.schema, sim.weights),
        "schema": model.schema.to_dict(),
        "scaler": model.scaler.to_dict(),
        "similarity": {
            "variant": sim.variant,
            "weights": sim.weights.values.tolist(),
            "exp_below": sim.local.below.tolist() if sim.local else None,
            "exp_above": sim.local.above.tolist() if sim.local else None,
            "ranges": sim.ranges.tolist(),
            "missing_sim": sim.missing_sim,
            "branch_convention": sim.branch_convention,
        },
        "k": model.k,
        "scoring_method": model.scoring_method,
        "training_metric": model.training_metric,
        "cv_score": model.cv_score,
        "candidate_scores": dict(model.candidate_scores),
        "prob_weights": model.prob_weights.to_dict() if model.prob_weights else None,
        "seeds": dict(model.seeds),
        "reference": {
            "ids": list(model.reference.ids),
            "X": _matrix_to_lists(model.reference.X),
            "labels": model.reference.labels.tolist(),
            "years": model.reference.years.tolist()
            if model.reference.years is not None
            else None,
            "provenance": model.reference.provenance,
        },
        "log": list(model.log),
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format") != FORMAT_NAME:
        raise DataError("not a model file")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported model version {doc.get('version')!r}")
    schema = FeatureSchema.from_dict(doc["schema"])
    sim_doc = doc["similarity"]
    local = None
    if sim_doc.get("exp_below") is not None:
        local = LocalParams(
            below=np.asarray(sim_doc["exp_below"], float),
            above=np.asarray(sim_doc["exp_above"], float),
        )
    similarity = SimilarityModel(
        variant=sim_doc["variant"],
        weights=GlobalWeights(np.asarray(sim_doc["weights"], float)),
        local=local,
        ranges=np.asarray(sim_doc["ranges"], float),
        missing_sim=float(sim_doc["missing_sim"]),
        branch_convention=sim_doc["branch_convention"],
    )
    ref_doc = doc["reference"]
    reference = Dataset(
        schema=schema,
        ids=list(ref_doc["ids"]),
        X=_lists_to_matrix(ref_doc["X"]),
        labels=np.asarray(ref_doc["labels"], dtype=np.int8),
        years=np.asarray(ref_doc["years"], dtype=np.int32)
        if ref_doc.get("years") is not None
        else None,
        provenance=ref_doc.get("provenance", ""),
    )
    prob = doc.get("prob_weights")
    return TrainedModel(
        schema=schema,
        scaler=ScalingParams.from_dict(doc["scaler"]),
        similarity=similarity,
        k=int(doc["k"]),
        scoring_method=doc["scoring_method"],
        training_metric=doc["training_metric"],
        cv_score=float(doc["cv_score"]),
        reference=reference,
        candidate_scores=dict(doc.get("candidate_scores", {})),
        prob_weights=ProbWeights.from_dict(prob) if prob else None,
        seeds=dict(doc.get("seeds", {})),
        log=list(doc.get("log", [])),
    )


def save_model(model: TrainedModel, path: str | Path):
    text = json.dumps(model_to_dict(model), sort_keys=True, indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such model file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid model file ({e})") from None
    return model_from_dict(doc)
