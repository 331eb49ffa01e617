from fractions import Fraction
from math import isclose, sqrt

import numpy as np
import pytest

from cbrisk.dataset import DataError
from cbrisk.metrics import (
    Confusion,
    compute_metrics,
    confusion,
    format_metric_table,
    roc_auc,
)


class TestConfusion:
    def test_exact_match(self):
        c = confusion([1, 1, 0], [1, 1, 0])
        assert (c.tp, c.tn, c.fp, c.fn) == (2, 1, 0, 0)

    def test_complement(self):
        c = confusion([0, 0, 1], [1, 1, 0])
        assert (c.tp, c.tn) == (0, 0)
        assert (c.fp, c.fn) == (1, 2)

    def test_random_against_tally(self):
        rng = np.random.default_rng(0)
        preds = rng.integers(0, 2, 1000)
        truth = rng.integers(0, 2, 1000)
        c = confusion(preds, truth)
        tally = {"tp": 0, "tn": 0, "fp": 0, "fn": 0}
        for p, t in zip(preds, truth):
            key = ("t" if p == t else "f") + ("p" if p == 1 else "n")
            tally[key] += 1
        assert (c.tp, c.tn, c.fp, c.fn) == (
            tally["tp"], tally["tn"], tally["fp"], tally["fn"],
        )

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            confusion([1, 0], [1])


def exact_report(tp, tn, fp, fn, beta=1):
    """Independent oracle via exact rational arithmetic."""
    tp, tn, fp, fn = (Fraction(v) for v in (tp, tn, fp, fn))
    bb = Fraction(beta) ** 2
    out = {
        "accuracy": (tp + tn) / (tp + tn + fp + fn),
        "fpr": fp / (tn + fp) if tn + fp else None,
        "fnr": fn / (fn + tp) if fn + tp else None,
        "tpr": tp / (tp + fn) if tp + fn else None,
        "tnr": tn / (fp + tn) if fp + tn else None,
        "f": (1 + bb) * tp / ((1 + bb) * tp + bb * fn + fp)
        if (1 + bb) * tp + bb * fn + fp
        else None,
    }
    out["auc"] = (1 + out["tpr"] - out["fpr"]) / 2
    out["gmean"] = sqrt(out["tnr"] * out["tpr"])
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    out["mcc"] = float(tp * tn - fp * fn) / sqrt(den) if den else None
    return out


class TestComputeMetrics:
    def test_hand_fixture(self):
        rep = compute_metrics(Confusion(tp=50, tn=40, fp=10, fn=0))
        oracle = exact_report(50, 40, 10, 0)
        assert rep.accuracy == pytest.approx(0.9, abs=1e-12)
        assert rep.tpr == pytest.approx(1.0, abs=1e-12)
        assert rep.tnr == pytest.approx(0.8, abs=1e-12)
        assert rep.auc_formula == pytest.approx(0.9, abs=1e-4)
        assert rep.g_mean == pytest.approx(0.8944, abs=1e-4)
        assert rep.f_measure == pytest.approx(0.9091, abs=1e-4)
        assert rep.mcc == pytest.approx(0.8165, abs=1e-4)
        for name, attr in [
            ("accuracy", rep.accuracy), ("fpr", rep.fpr), ("tpr", rep.tpr),
            ("tnr", rep.tnr), ("f", rep.f_measure), ("auc", rep.auc_formula),
            ("gmean", rep.g_mean), ("mcc", rep.mcc),
        ]:
            assert attr == pytest.approx(float(oracle[name]), abs=1e-12)

    def test_perfect_classifier(self):
        rep = compute_metrics(Confusion(tp=5, tn=5, fp=0, fn=0))
        for v in (rep.accuracy, rep.tpr, rep.tnr, rep.f_measure,
                  rep.g_mean, rep.auc_formula, rep.mcc):
            assert v == 1.0
        assert rep.degenerate == ()

    def test_auc_from_rates(self):
        # TPR 0.8 (8/10), TNR 0.7 (7/10)
        rep = compute_metrics(Confusion(tp=8, fn=2, tn=7, fp=3))
        assert rep.auc_formula == pytest.approx(0.75, abs=1e-12)

    def test_identities_random(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            tp, tn, fp, fn = rng.integers(0, 40, 4)
            if tp + tn + fp + fn == 0:
                continue
            rep = compute_metrics(Confusion(int(tp), int(tn), int(fp), int(fn)))
            if tp + fn > 0:
                assert isclose(rep.tpr + rep.fnr, 1.0, abs_tol=1e-12)
            if tn + fp > 0:
                assert isclose(rep.tnr + rep.fpr, 1.0, abs_tol=1e-12)
                if tp + fn > 0:
                    assert isclose(
                        rep.auc_formula, (rep.tpr + rep.tnr) / 2, abs_tol=1e-12
                    )
                    assert rep.g_mean <= rep.auc_formula + 1e-12

    def test_mcc_swap_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            tp, tn, fp, fn = (int(v) for v in rng.integers(1, 30, 4))
            a = compute_metrics(Confusion(tp, tn, fp, fn)).mcc
            b = compute_metrics(Confusion(tn, tp, fn, fp)).mcc
            assert isclose(a, b, abs_tol=1e-12)

    def test_degenerate_flags(self):
        rep = compute_metrics(Confusion(tp=0, tn=4, fp=0, fn=0))
        assert "tpr" in rep.degenerate and "fnr" in rep.degenerate
        assert rep.tpr == 0.0
        assert "mcc" in rep.degenerate

    def test_beta_parameter(self):
        rep = compute_metrics(Confusion(tp=50, tn=40, fp=10, fn=0), beta=2.0)
        oracle = exact_report(50, 40, 10, 0, beta=2)
        assert rep.f_measure == pytest.approx(float(oracle["f"]), abs=1e-12)
        assert rep.beta == 2.0


class TestRocAuc:
    def test_separable(self):
        assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_random_against_pair_count(self):
        rng = np.random.default_rng(3)
        scores = rng.random(60)
        truth = rng.integers(0, 2, 60)
        if truth.sum() in (0, 60):
            truth[0] = 1 - truth[0]
        pos = scores[truth == 1]
        neg = scores[truth == 0]
        wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
        assert roc_auc(scores, truth) == pytest.approx(
            wins / (len(pos) * len(neg)), abs=1e-12
        )


def test_format_table_flags_best():
    r1 = compute_metrics(Confusion(tp=50, tn=40, fp=10, fn=0))
    r2 = compute_metrics(Confusion(tp=30, tn=30, fp=20, fn=20))
    text, csv_text = format_metric_table({"one": r1, "two": r2})
    assert "one" in text and "two" in text
    line_one = next(l for l in text.splitlines() if l.startswith("one"))
    assert "*" in line_one
    assert csv_text.startswith("variant,")
    assert len(csv_text.strip().splitlines()) == 3
