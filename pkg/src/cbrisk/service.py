"""HTTP API over a loaded model: prediction, explanation, what-if, curves.

The model and its reference base are immutable for the process lifetime, so
every endpoint is a pure computation and identical requests get identical
responses (given fixed seeds). Each numeric field is serialized twice: at
6 significant digits for display and at full precision (``*_full`` or the
``full_precision`` block) for test harnesses and the UI contract.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .dataset import DataError
from .explain import (
    DEFAULT_MC_SAMPLES,
    SUBSET_SEMANTICS_NOTE,
    local_function_curve,
    shapley_exact,
    shapley_mc,
    whatif_accumulate,
)
from .training import TrainedModel

MODES = {"exact": "exact", "mc": "monte_carlo", "monte_carlo": "monte_carlo"}


def sig6(x: float) -> float:
    return float(f"{float(x):.6g}")


def full(x: float) -> str:
    return repr(float(x))


async def _json_body(request: Request) -> dict:
    raw = await request.body()
    if not raw:
        raise HTTPException(status_code=400, detail="empty request body")
    try:
        import json

        payload = json.loads(raw)
    except ValueError:
        raise HTTPException(status_code=400, detail="malformed JSON body") from None
    if not isinstance(payload, dict):
        raise HTTPException(status_code=400, detail="body must be a JSON object")
    return payload


def parse_case(case: object, model: TrainedModel) -> np.ndarray:
    """Feature map -> raw value vector; absent keys are missing slots."""
    if not isinstance(case, dict):
        raise HTTPException(status_code=400, detail="case must be a feature map")
    values = np.full(model.schema.n_features, np.nan)
    for key, raw in case.items():
        try:
            j = model.schema.index_of(str(key))
        except KeyError:
            raise HTTPException(
                status_code=400, detail=f"unknown feature key {key!r}"
            ) from None
        if raw is None:
            continue
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise HTTPException(
                status_code=422, detail=f"non-numeric value for {key!r}: {raw!r}"
            )
        if isinstance(raw, float) and not math.isfinite(raw):
            raise HTTPException(
                status_code=422, detail=f"non-finite value for {key!r}"
            )
        values[j] = float(raw)
    return values


def _neighbor_payload(neighbors) -> list[dict]:
    return [
        {
            "id": n.id,
            "label": n.label,
            "similarity": sig6(n.similarity),
            "similarity_full": full(n.similarity),
        }
        for n in neighbors
    ]


def create_app(model: TrainedModel, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="cbrisk", docs_url=None, redoc_url=None)

    @app.exception_handler(DataError)
    async def data_error_handler(_request, exc: DataError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health")
    async def health():
        return {
            "status": "ok",
            "variant": model.similarity.variant,
            "k": model.k,
            "n_features": model.schema.n_features,
            "features": list(model.schema.names),
            "feature_codes": list(model.schema.codes) if model.schema.codes else None,
            "units": list(model.schema.units) if model.schema.units else None,
            "scoring_method": model.scoring_method,
            "training_metric": model.training_metric,
            "cv_score": sig6(model.cv_score),
            "cv_score_full": full(model.cv_score),
            "reference_cases": len(model.reference),
            "has_prob_weights": model.prob_weights is not None,
        }

    @app.post("/predict")
    async def predict(request: Request):
        payload = await _json_body(request)
        if "case" not in payload:
            raise HTTPException(status_code=400, detail="missing 'case' field")
        values = parse_case(payload["case"], model)
        label, proba, neighbors = model.predict_values(values)
        return {
            "label": int(label),
            "probability": sig6(proba),
            "probability_full": full(proba),
            "neighbors": _neighbor_payload(neighbors),
        }

    @app.post("/explain")
    async def explain(request: Request):
        payload = await _json_body(request)
        if "case" not in payload:
            raise HTTPException(status_code=400, detail="missing 'case' field")
        values = parse_case(payload["case"], model)
        mode_raw = payload.get("mode", "mc")
        if mode_raw not in MODES:
            raise HTTPException(
                status_code=400, detail=f"mode must be one of {sorted(MODES)}"
            )
        mode = MODES[mode_raw]
        samples = payload.get("samples", DEFAULT_MC_SAMPLES)
        seed = payload.get("seed", 0)
        if not isinstance(samples, int) or samples < 1:
            raise HTTPException(status_code=400, detail="samples must be a positive integer")
        if not isinstance(seed, int):
            raise HTTPException(status_code=400, detail="seed must be an integer")
        label, proba, neighbors = model.predict_values(values)
        try:
            if mode == "exact":
                shap = shapley_exact(values, model, model.prob_weights)
            else:
                shap = shapley_mc(
                    values, model, model.prob_weights, samples=samples, seed=seed
                )
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        order = shap.ranking()
        return {
            "label": int(label),
            "probability": sig6(proba),
            "probability_full": full(proba),
            "neighbors": _neighbor_payload(neighbors),
            "relevance_percent": [
                sig6(v) for v in model.similarity.weights.values * 100.0
            ],
            "shapley": {
                "mode": shap.mode,
                "samples": shap.samples,
                "seed": shap.seed,
                "features": list(model.schema.names),
                "values": [sig6(v) for v in shap.values],
                "values_full": [full(v) for v in shap.values],
                "stderr": [sig6(v) for v in shap.stderr] if shap.stderr is not None else None,
                "baseline": sig6(shap.baseline),
                "baseline_full": full(shap.baseline),
                "prediction": sig6(shap.full),
                "prediction_full": full(shap.full),
                "efficiency_residual": shap.efficiency_residual,
                "ranking": [int(j) for j in order],
            },
            "note": SUBSET_SEMANTICS_NOTE,
        }

    @app.post("/whatif")
    async def whatif(request: Request):
        payload = await _json_body(request)
        for key in ("base_case", "target_case"):
            if key not in payload:
                raise HTTPException(status_code=400, detail=f"missing '{key}' field")
        base = parse_case(payload["base_case"], model)
        target = parse_case(payload["target_case"], model)
        ordering = None
        if payload.get("ordering") is not None:
            names = payload["ordering"]
            if not isinstance(names, list):
                raise HTTPException(status_code=400, detail="ordering must be a list")
            try:
                ordering = [model.schema.index_of(str(n)) for n in names]
            except KeyError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
            if len(set(ordering)) != len(ordering):
                raise HTTPException(
                    status_code=400, detail="ordering contains duplicate features"
                )
        seed = payload.get("seed", 0)
        samples = payload.get("samples", DEFAULT_MC_SAMPLES)
        traj = whatif_accumulate(
            base, target, model, ordering=ordering, samples=samples, seed=seed
        )
        return {
            "ordering": traj.ordering,
            "feature_names": traj.feature_names,
            "probabilities": [sig6(p) for p in traj.probabilities],
            "probabilities_full": [full(p) for p in traj.probabilities],
        }

    @app.get("/curves/{feature}")
    async def curves(feature: str):
        try:
            j = model.schema.index_of(feature)
        except KeyError:
            raise HTTPException(
                status_code=404, detail=f"unknown feature {feature!r}"
            ) from None
        deltas, values = local_function_curve(model, j, points=201)
        return {
            "feature": model.schema.names[j],
            "index": j,
            "exp_below": float(model.similarity.local.below[j]),
            "exp_above": float(model.similarity.local.above[j]),
            "differences": [sig6(d) for d in deltas],
            "values": [sig6(v) for v in values],
            "values_full": [full(v) for v in values],
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
