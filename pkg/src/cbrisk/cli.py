"""Command-line interface: train, predict, explain, benchmark, synth, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Every subcommand is deterministic given its ``--seed``; one base seed fans
out to per-component streams (undersampling, folds, swarms, scoring) via
fixed derivations, so reruns with identical flags reproduce outputs byte
for byte. ``--jobs`` (default from the CBRISK_JOBS environment variable)
bounds worker threads for similarity, swarm and attribution work.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .dataset import (
    DataError,
    Dataset,
    FeatureSchema,
    financial_statement_schema,
    load_csv,
    save_csv,
    stratified_split,
)
from .explain import DEFAULT_MC_SAMPLES, build_report
from .metrics import METRIC_KEYS, compute_metrics, confusion, format_metric_table
from .modelfile import load_model, save_model
from .probability import fit_prob_weights
from .retrieval import DEFAULT_K_GRID
from .similarity import VARIANTS
from .synth import SynthConfig, synth_generate
from .training import TrainingConfig, design_acbr, train_variant
from .weighting import SCORING_METHODS, format_relevance_table

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("CBRISK_JOBS", "1")))
    except ValueError:
        return 1


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise DataError(f"expected comma-separated integers, got {text!r}") from None


def _schema_for_csv(path: Path) -> FeatureSchema:
    """Build the schema from the CSV header (id/year/label are structural)."""
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if not header:
        raise DataError(f"{path}: empty file")
    feature_cols = [
        h.strip() for h in header if h.strip().lower() not in ("id", "year", "label")
    ]
    if not feature_cols:
        raise DataError(f"{path}: no feature columns")
    fin = financial_statement_schema()
    lowered = {c.lower() for c in feature_cols}
    if lowered == {c.lower() for c in fin.codes} or lowered == {
        n.lower() for n in fin.names
    }:
        return fin
    return FeatureSchema(names=tuple(feature_cols))


def _load(path: str, require_labels: bool = True) -> Dataset:
    p = Path(path)
    schema = _schema_for_csv(p)
    return load_csv(p, schema, require_labels=require_labels)


def cmd_train(args) -> int:
    data = _load(args.data)
    config = TrainingConfig(
        scoring_methods=tuple(args.methods.split(",")),
        metric=args.metric,
        folds=args.folds,
        k_grid=_parse_int_list(args.k_grid),
        swarm_size=args.swarm,
        pso_iterations=args.pso_iters,
        missing_sim=args.missing_sim,
        undersample=not args.no_undersample,
        jobs=args.jobs,
    )
    model = design_acbr(data, config, seed=args.seed)
    if not args.skip_prob:
        from .dataset import apply_scaler

        scaled = apply_scaler(model.reference, model.scaler)
        model.prob_weights = fit_prob_weights(
            scaled, model, seed=model.seeds["prob"], folds=config.folds, jobs=args.jobs
        )
    save_model(model, args.out)

    lines = ["training report", "===============", ""]
    lines.append(f"cases: {len(data)} (base after balancing: {len(model.reference)})")
    lines.append(f"selected K: {model.k}")
    lines.append(f"training metric: {model.training_metric}")
    lines.append("")
    lines.append("candidate weightings (CV score):")
    for method, score in model.candidate_scores.items():
        marker = " *" if method == model.scoring_method else ""
        lines.append(f"  {method:<12} {score:.6f}{marker}")
    lines.append("")
    lines.append(f"selected scoring method: {model.scoring_method}")
    lines.append(f"CV {model.training_metric}: {model.cv_score:.6f}")
    lines.append("")
    lines.append("feature relevance (%):")
    lines.append(format_relevance_table(model.schema, model.similarity.weights))
    report = "\n".join(lines) + "\n"
    if args.report:
        Path(args.report).write_text(report, encoding="utf-8")
    print(report)
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    data = _load(args.data, require_labels=False)
    labels, probas, neighbors = model.predict_dataset(data, workers=args.jobs)
    out = Path(args.out)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", "probability", "k", "neighbors"])
        for i in range(len(data)):
            packed = ";".join(
                f"{n.id}:{repr(n.similarity)}" for n in neighbors[i]
            )
            writer.writerow(
                [data.ids[i], int(labels[i]), repr(float(probas[i])), model.k, packed]
            )
    if data.fully_labeled:
        rep = compute_metrics(confusion(labels, data.labels))
        print(f"accuracy={rep.accuracy:.4f} auc={rep.auc_formula:.4f} mcc={rep.mcc:.4f}")
    print(f"predictions written to {out}")
    return EXIT_OK


def _case_values(args, model) -> tuple[str, np.ndarray]:
    if args.case is not None:
        idx = model.reference.index_of_id(args.case)
        return args.case, model.reference.X[idx].copy()
    if args.data is None or args.row is None:
        raise DataError("provide --case ID or --data CSV with --row N")
    data = _load(args.data, require_labels=False)
    if not 0 <= args.row < len(data):
        raise DataError(f"row {args.row} out of range for {len(data)} cases")
    return data.ids[args.row], data.X[args.row].copy()


def cmd_explain(args) -> int:
    model = load_model(args.model)
    query_id, values = _case_values(args, model)
    mode = {"none": None, "exact": "exact", "mc": "monte_carlo"}[args.shapley]
    target_values = None
    target_id = "target"
    if args.whatif_target is not None:
        target_id = args.whatif_target
        target_values = model.reference.X[
            model.reference.index_of_id(args.whatif_target)
        ].copy()
    ordering = None
    if args.order not in (None, "shapley"):
        ordering = [model.schema.index_of(n.strip()) for n in args.order.split(",")]
    exclude = query_id if args.exclude_self else None
    report = build_report(
        values,
        model,
        query_id=query_id,
        shapley_mode=mode,
        samples=args.samples,
        seed=args.seed,
        whatif_target=target_values,
        whatif_target_id=target_id,
        whatif_ordering=ordering,
        exclude_id=exclude,
    )

    print(f"case {report.query_id}: predicted "
          f"{'insolvent' if report.predicted_label else 'solvent'} "
          f"(insolvency probability {report.probability:.4f})")
    print()
    print("nearest references:")
    tbl = report.neighbors
    for nid, lab, sim in zip(tbl.neighbor_ids, tbl.neighbor_labels, tbl.similarities):
        print(f"  {nid:<12} {'insolvent' if lab else 'solvent':<10} sim={sim:.4f}")
    if report.shapley is not None:
        shap = report.shapley
        print()
        print(f"feature attributions ({shap.mode}, residual "
              f"{shap.efficiency_residual:.2e}):")
        for j in shap.ranking()[:10]:
            print(f"  {model.schema.names[j]:<36} {shap.values[j]:+.4f}")
    if report.whatif is not None:
        print()
        print("what-if trajectory (insolvency probability per replacement):")
        print(f"  start {report.whatif.probabilities[0]:.4f}")
        for name, p in zip(report.whatif.feature_names, report.whatif.probabilities[1:]):
            print(f"  + {name:<34} {p:.4f}")
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        print(f"\nreport written to {args.out}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    data = _load(args.data)
    variants = [v.strip() for v in args.variants.split(",")]
    for v in variants:
        if v not in VARIANTS:
            raise DataError(f"unknown variant {v!r}")
    train, test = stratified_split(data, test_fraction=0.2, seed=args.seed)
    config = TrainingConfig(
        scoring_methods=tuple(args.methods.split(",")),
        metric=args.metric,
        folds=args.folds,
        k_grid=_parse_int_list(args.k_grid),
        swarm_size=args.swarm,
        pso_iterations=args.pso_iters,
        jobs=args.jobs,
    )
    rows = {}
    for variant in variants:
        model = train_variant(train, variant, config, seed=args.seed)
        labels, _, _ = model.predict_dataset(test, workers=args.jobs)
        rows[variant] = compute_metrics(confusion(labels, test.labels))
    text, csv_text = format_metric_table(rows)
    print(text)
    if args.out_prefix:
        Path(args.out_prefix + ".txt").write_text(text + "\n", encoding="utf-8")
        Path(args.out_prefix + ".csv").write_text(csv_text, encoding="utf-8")
        print(f"tables written to {args.out_prefix}.txt / .csv")
    return EXIT_OK


def cmd_synth(args) -> int:
    config = SynthConfig(
        n_features=args.features,
        n_solvent=args.solvent,
        n_insolvent=args.insolvent,
        skew=args.skew,
        noise=args.noise,
        missing_rate=args.missing_rate,
    )
    data = synth_generate(config, seed=args.seed)
    save_csv(data, args.out)
    print(f"wrote {len(data)} cases to {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model = load_model(args.model)
    app = create_app(model, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbrisk",
        description="Explainable case-based insolvency prediction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    jobs_kw = dict(type=int, default=_default_jobs(), help="worker threads")

    p = sub.add_parser("train", help="design a model from a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model file path")
    p.add_argument("--methods", default=",".join(SCORING_METHODS))
    p.add_argument("--metric", default="accuracy", choices=METRIC_KEYS)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--k-grid", default=",".join(map(str, DEFAULT_K_GRID)))
    p.add_argument("--swarm", type=int, default=30)
    p.add_argument("--pso-iters", type=int, default=100)
    p.add_argument("--missing-sim", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", **jobs_kw)
    p.add_argument("--report", help="write the text report here as well")
    p.add_argument("--no-undersample", action="store_true")
    p.add_argument("--skip-prob", action="store_true",
                   help="skip fitting posterior rank weights")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify cases from a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", **jobs_kw)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="explain one prediction")
    p.add_argument("--model", required=True)
    p.add_argument("--case", help="case id inside the model's reference base")
    p.add_argument("--data", help="CSV with query cases")
    p.add_argument("--row", type=int, help="0-based row in --data")
    p.add_argument("--shapley", default="none", choices=("none", "exact", "mc"))
    p.add_argument("--samples", type=int, default=DEFAULT_MC_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--whatif-target", help="case id to move towards")
    p.add_argument("--order", help="'shapley' or comma-separated feature names")
    p.add_argument("--exclude-self", action="store_true",
                   help="drop the query's own id from the reference base")
    p.add_argument("--out", help="write the structured report (JSON) here")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("benchmark", help="compare similarity variants on one CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--variants", default=",".join(VARIANTS))
    p.add_argument("--methods", default=",".join(SCORING_METHODS))
    p.add_argument("--metric", default="accuracy", choices=METRIC_KEYS)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--k-grid", default=",".join(map(str, DEFAULT_K_GRID)))
    p.add_argument("--swarm", type=int, default=30)
    p.add_argument("--pso-iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", **jobs_kw)
    p.add_argument("--out-prefix", help="write <prefix>.txt and <prefix>.csv")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("synth", help="generate a synthetic labeled CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--features", type=int, default=6)
    p.add_argument("--solvent", type=int, default=1700)
    p.add_argument("--insolvent", type=int, default=300)
    p.add_argument("--skew", type=float, default=1.5)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--missing-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="serve the HTTP API for a model")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", help="directory of built UI assets to serve at /")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
