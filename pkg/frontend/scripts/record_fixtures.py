"""Record service responses as JSON fixtures for the console's contract tests.

Builds a small deterministic model, spins up the service in-process, and
captures one response per endpoint plus the exact request payloads, so the
UI tests can assert that every rendered number equals a response field.

Run from the repository root:  python frontend/scripts/record_fixtures.py
"""
import json
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from cbrisk.dataset import Dataset, FeatureSchema, fit_scaler
from cbrisk.probability import ProbWeights
from cbrisk.service import create_app
from cbrisk.similarity import GlobalWeights, LocalParams, SimilarityModel
from cbrisk.training import TrainedModel

OUT_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def build_model() -> TrainedModel:
    rng = np.random.default_rng(2024)
    n, L = 40, 4
    schema = FeatureSchema.generic(L)
    reference = Dataset(
        schema=schema,
        ids=[f"R{i:03d}" for i in range(n)],
        X=rng.random((n, L)),
        labels=np.array([0, 1] * (n // 2), dtype=np.int8),
    )
    similarity = SimilarityModel.acbr(
        GlobalWeights(np.array([0.4, 0.3, 0.3, 0.0])),  # VAR4 is a dummy
        LocalParams(
            below=np.array([2.12, 1.0, 3.0, 0.7]),
            above=np.array([5.53, 1.0, 0.5, 2.0]),
        ),
    )
    return TrainedModel(
        schema=schema,
        scaler=fit_scaler(reference),
        similarity=similarity,
        k=3,
        scoring_method="gini",
        training_metric="accuracy",
        cv_score=0.875,
        reference=reference,
        prob_weights=ProbWeights.from_free_params(np.array([0.6, 0.3]), tail=-2.0),
        seeds={},
        log=[],
    )


def main():
    model = build_model()
    client = TestClient(create_app(model))
    rng = np.random.default_rng(7)
    base_case = {f"VAR{j + 1}": round(float(v), 6) for j, v in enumerate(rng.random(4))}
    edited_case = dict(base_case)
    edited_case["VAR1"] = round(base_case["VAR1"] + 0.2, 6)
    target_case = {f"VAR{j + 1}": round(float(v), 6) for j, v in enumerate(rng.random(4))}

    fixtures = {
        "cases.json": {
            "base_case": base_case,
            "edited_case": edited_case,
            "edited_feature": "VAR1",
            "edited_value": edited_case["VAR1"],
            "target_case": target_case,
        },
        "health.json": client.get("/health").json(),
        "predict_base.json": client.post("/predict", json={"case": base_case}).json(),
        "predict_edited.json": client.post("/predict", json={"case": edited_case}).json(),
        "explain.json": client.post(
            "/explain",
            json={"case": base_case, "mode": "mc", "samples": 500, "seed": 3},
        ).json(),
        "whatif.json": client.post(
            "/whatif",
            json={"base_case": base_case, "target_case": target_case},
        ).json(),
        "curves.json": client.get("/curves/VAR1").json(),
    }
    OUT_DIR.mkdir(exist_ok=True)
    for name, doc in fixtures.items():
        (OUT_DIR / name).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        print(f"wrote fixtures/{name}")


if __name__ == "__main__":
    main()
