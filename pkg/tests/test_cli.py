import csv
import json

import pytest

from cbrisk.cli import main
from cbrisk.dataset import load_csv, save_csv
from cbrisk.modelfile import load_model

from conftest import make_separable


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "train.csv"
    rc = main([
        "synth", "--out", str(path), "--features", "3",
        "--solvent", "120", "--insolvent", "60", "--seed", "5",
    ])
    assert rc == 0
    return path


@pytest.fixture(scope="module")
def trained(tmp_path_factory, synth_csv):
    out = tmp_path_factory.mktemp("model") / "model.json"
    rc = main([
        "train", "--data", str(synth_csv), "--out", str(out),
        "--methods", "gini", "--k-grid", "3,5", "--swarm", "6",
        "--pso-iters", "3", "--seed", "7",
    ])
    assert rc == 0
    return out


def train_args(data, out, **extra):
    args = [
        "train", "--data", str(data), "--out", str(out),
        "--methods", "gini", "--k-grid", "3,5", "--swarm", "6",
        "--pso-iters", "3", "--seed", "7",
    ]
    for key, val in extra.items():
        args += [f"--{key.replace('_', '-')}", str(val)]
    return args


class TestTrain:
    def test_byte_identical_reruns(self, tmp_path, synth_csv):
        out1, out2 = tmp_path / "m1.json", tmp_path / "m2.json"
        assert main(train_args(synth_csv, out1)) == 0
        assert main(train_args(synth_csv, out2)) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_report_lists_single_candidate(self, tmp_path, synth_csv, capsys):
        out = tmp_path / "m.json"
        report = tmp_path / "report.txt"
        rc = main(train_args(synth_csv, out) + ["--report", str(report)])
        assert rc == 0
        model = load_model(out)
        assert list(model.candidate_scores) == ["gini"]
        text = report.read_text()
        assert "gini" in text and "selected scoring method: gini" in text

    def test_zero_pso_iters_at_least_epcbr(self, tmp_path, synth_csv):
        out = tmp_path / "m0.json"
        rc = main(train_args(synth_csv, out, pso_iters=0))
        assert rc == 0
        model = load_model(out)
        from cbrisk.dataset import apply_scaler
        from cbrisk.similarity import LocalParams
        from cbrisk.training import cv_cost

        scaled = apply_scaler(model.reference, model.scaler)
        ep = cv_cost(
            LocalParams.unit(3), model.similarity.weights, model.k, scaled,
            seed=model.seeds["cv"],
        )
        assert model.cv_score >= ep

    def test_missing_file_exits_2(self, tmp_path):
        rc = main(["train", "--data", str(tmp_path / "nope.csv"),
                   "--out", str(tmp_path / "m.json")])
        assert rc == 2

    def test_usage_error_exits_1(self):
        assert main(["train"]) == 1
        assert main(["frobnicate"]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "cbrisk" in capsys.readouterr().out


class TestPredict:
    def test_row_count_and_probability_format(self, tmp_path, trained, synth_csv):
        out = tmp_path / "preds.csv"
        rc = main(["predict", "--model", str(trained), "--data", str(synth_csv),
                   "--out", str(out)])
        assert rc == 0
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 180
        for row in rows[:5]:
            p = float(row["probability"])
            assert 0.0 <= p <= 1.0
            assert row["label"] in ("0", "1")
            assert len(row["neighbors"].split(";")) == int(row["k"])

    def test_self_match_with_k1(self, tmp_path):
        data = make_separable(12, 2, seed=3)
        csv_path = tmp_path / "d.csv"
        save_csv(data, csv_path)
        model_path = tmp_path / "m.json"
        rc = main([
            "train", "--data", str(csv_path), "--out", str(model_path),
            "--methods", "gini", "--k-grid", "1", "--swarm", "6",
            "--pso-iters", "2", "--seed", "1", "--skip-prob",
        ])
        assert rc == 0
        out = tmp_path / "p.csv"
        assert main(["predict", "--model", str(model_path),
                     "--data", str(csv_path), "--out", str(out)]) == 0
        model = load_model(model_path)
        with out.open() as fh:
            rows = {r["id"]: r for r in csv.DictReader(fh)}
        # every retained case predicts its own label via the exact self-match
        hits = [int(rows[cid]["label"]) == int(lab)
                for cid, lab in zip(model.reference.ids, model.reference.labels)]
        assert all(hits)

    def test_empty_query_file_exits_2(self, tmp_path, trained, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text("id,VAR1,VAR2,VAR3,label\n")
        rc = main(["predict", "--model", str(trained), "--data", str(empty),
                   "--out", str(tmp_path / "o.csv")])
        assert rc == 2
        assert "zero data rows" in capsys.readouterr().err


class TestExplain:
    def test_default_scope_neighbors_and_probability(self, trained, capsys):
        model = load_model(trained)
        rc = main(["explain", "--model", str(trained),
                   "--case", model.reference.ids[0]])
        assert rc == 0
        out = capsys.readouterr().out
        assert "insolvency probability" in out
        assert "nearest references" in out
        assert "attributions" not in out

    def test_exact_shapley_with_report(self, tmp_path, trained, capsys):
        model = load_model(trained)
        report = tmp_path / "r.json"
        rc = main(["explain", "--model", str(trained),
                   "--case", model.reference.ids[2], "--shapley", "exact",
                   "--out", str(report)])
        assert rc == 0
        doc = json.loads(report.read_text())
        assert abs(doc["shapley"]["efficiency_residual"]) < 1e-9
        assert "residual" in capsys.readouterr().out

    def test_whatif_trajectory_length(self, tmp_path, trained):
        model = load_model(trained)
        report = tmp_path / "w.json"
        rc = main(["explain", "--model", str(trained),
                   "--case", model.reference.ids[0],
                   "--whatif-target", model.reference.ids[1],
                   "--shapley", "exact", "--order", "shapley",
                   "--out", str(report)])
        assert rc == 0
        doc = json.loads(report.read_text())
        assert len(doc["whatif"]["probabilities"]) == 3 + 1

    def test_unknown_case_exits_2(self, trained):
        rc = main(["explain", "--model", str(trained), "--case", "NOPE"])
        assert rc == 2

    def test_explain_csv_row(self, tmp_path, trained, synth_csv, capsys):
        rc = main(["explain", "--model", str(trained), "--data", str(synth_csv),
                   "--row", "4"])
        assert rc == 0
        assert "insolvency probability" in capsys.readouterr().out
        rc = main(["explain", "--model", str(trained), "--data", str(synth_csv),
                   "--row", "100000"])
        assert rc == 2


class TestBenchmark:
    def test_separable_variants_near_one(self, tmp_path, capsys):
        data = make_separable(40, 2, seed=9)
        csv_path = tmp_path / "d.csv"
        save_csv(data, csv_path)
        rc = main([
            "benchmark", "--data", str(csv_path), "--variants", "ecbr,ewcbr",
            "--methods", "gini", "--k-grid", "3", "--swarm", "4",
            "--pso-iters", "1", "--seed", "11",
            "--out-prefix", str(tmp_path / "bench"),
        ])
        assert rc == 0
        csv_text = (tmp_path / "bench.csv").read_text()
        rows = list(csv.DictReader(csv_text.splitlines()))
        assert {r["variant"] for r in rows} == {"ecbr", "ewcbr"}
        for row in rows:
            assert float(row["Accuracy"]) > 0.9

    def test_deterministic_table(self, tmp_path):
        data = make_separable(20, 2, seed=10)
        csv_path = tmp_path / "d.csv"
        save_csv(data, csv_path)
        outs = []
        for tag in ("a", "b"):
            prefix = tmp_path / f"bench_{tag}"
            rc = main([
                "benchmark", "--data", str(csv_path), "--variants", "ewcbr,mcbr",
                "--methods", "gini", "--k-grid", "3", "--swarm", "4",
                "--pso-iters", "1", "--seed", "3",
                "--out-prefix", str(prefix),
            ])
            assert rc == 0
            outs.append((prefix.parent / (prefix.name + ".csv")).read_text())
        assert outs[0] == outs[1]


def test_synth_csv_round_trip(synth_csv):
    from cbrisk.dataset import FeatureSchema

    data = load_csv(synth_csv, FeatureSchema.generic(3))
    assert len(data) == 180
    assert data.class_counts() == (120, 60)


def test_serve_invalid_model_exits_2(tmp_path, capsys):
    rc = main(["serve", "--model", str(tmp_path / "missing.json"),
               "--port", "59999"])
    assert rc == 2
    assert "no such model file" in capsys.readouterr().err


def test_model_file_embeds_relevance_table(trained):
    doc = json.loads(trained.read_text())
    table = doc["relevance_table"]
    assert len(table.splitlines()) == 3
    for name in ("VAR1", "VAR2", "VAR3"):
        assert name in table
