import numpy as np
import pytest

from cbrisk.dataset import DataError, financial_statement_schema
from cbrisk.similarity import GlobalWeights
from cbrisk.weighting import (
    SCORING_METHODS,
    ScoringMethod,
    format_relevance_table,
    relevance_percent,
    score_features,
)

from conftest import make_dataset


def informative_data(n=400, seed=0):
    """Three label-driven features plus one pure-noise feature."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = np.column_stack(
        [
            y + 0.08 * rng.standard_normal(n),
            0.7 * y + 0.2 * rng.standard_normal(n),
            0.5 * y + 0.3 * rng.standard_normal(n),
            rng.random(n),
        ]
    )
    X = (X - X.min(axis=0)) / (X.max(axis=0) - X.min(axis=0))
    return make_dataset(X, y)


@pytest.mark.parametrize("tag", SCORING_METHODS)
class TestPerMethod:
    def test_perfect_predictor_wins(self, tag):
        rng = np.random.default_rng(1)
        n = 300
        y = rng.integers(0, 2, n)
        X = np.column_stack([y.astype(float), rng.random(n), rng.random(n)])
        data = make_dataset(X, y)
        w = score_features(data, ScoringMethod(tag=tag)).values
        assert w[0] > w[1] and w[0] > w[2]

    def test_constant_feature_scores_zero(self, tag):
        rng = np.random.default_rng(2)
        n = 200
        y = rng.integers(0, 2, n)
        X = np.column_stack([np.full(n, 0.3), y + 0.1 * rng.standard_normal(n)])
        data = make_dataset(X, y)
        w = score_features(data, ScoringMethod(tag=tag)).values
        assert w[0] == 0.0

    def test_weights_valid(self, tag):
        data = informative_data(seed=3)
        w = score_features(data, ScoringMethod(tag=tag))
        assert isinstance(w, GlobalWeights)
        assert (w.values >= 0).all()
        assert w.values.sum() == pytest.approx(1.0, abs=1e-9)

    def test_permutation_invariance(self, tag):
        data = informative_data(n=150, seed=4)
        w1 = score_features(data, ScoringMethod(tag=tag)).values
        perm = np.random.default_rng(5).permutation(len(data))
        w2 = score_features(data.subset(perm), ScoringMethod(tag=tag)).values
        assert np.allclose(w1, w2, atol=1e-10)

    def test_deterministic(self, tag):
        data = informative_data(n=150, seed=6)
        m = ScoringMethod(tag=tag, seed=9)
        a = score_features(data, m).values
        b = score_features(data, m).values
        assert np.array_equal(a, b)

    def test_single_class_error(self, tag):
        data = make_dataset(np.random.default_rng(0).random((20, 2)), [1] * 20)
        with pytest.raises(DataError, match="both classes"):
            score_features(data, ScoringMethod(tag=tag))


@pytest.mark.parametrize("tag", ["gini", "entropy", "chi2"])
def test_uniform_duplication_keeps_weights(tag):
    data = informative_data(n=120, seed=7)
    doubled = data.subset(np.tile(np.arange(len(data)), 2))
    w1 = score_features(data, ScoringMethod(tag=tag)).values
    w2 = score_features(doubled, ScoringMethod(tag=tag)).values
    assert np.allclose(w1, w2, atol=1e-12)


def test_independent_feature_near_uniform_share_mutual_info():
    data = informative_data(n=10000, seed=8)
    w = score_features(data, ScoringMethod(tag="mutual_info")).values
    # the noise feature may not exceed twice the uniform share
    assert w[3] <= 2.0 / 4.0
    assert w[3] < w[0]


def test_all_zero_scores_fall_back_to_uniform():
    n = 60
    y = np.array([0, 1] * (n // 2))
    X = np.column_stack([np.full(n, 1.0), np.full(n, 2.0)])
    data = make_dataset(X, y)
    with pytest.warns(UserWarning, match="uniform"):
        w = score_features(data, ScoringMethod(tag="gini"))
    assert np.allclose(w.values, 0.5)


def test_missing_values_tolerated():
    rng = np.random.default_rng(10)
    n = 200
    y = rng.integers(0, 2, n)
    X = np.column_stack([y + 0.1 * rng.standard_normal(n), rng.random(n)])
    X[rng.random(X.shape) < 0.1] = np.nan
    data = make_dataset(X, y)
    for tag in SCORING_METHODS:
        w = score_features(data, ScoringMethod(tag=tag)).values
        assert np.isfinite(w).all()
        assert w[0] > w[1]


class TestRelevance:
    def test_simple_scaling(self):
        pct = relevance_percent(GlobalWeights(np.array([0.25, 0.75])))
        assert np.allclose(pct, [25.0, 75.0])

    def test_uniform_28(self):
        pct = relevance_percent(GlobalWeights.uniform(28))
        assert pct[0] == pytest.approx(3.5714, abs=1e-4)
        assert pct.sum() == pytest.approx(100.0, abs=1e-6)

    def test_render_top_entry(self):
        schema = financial_statement_schema()
        j_ap = schema.index_of("Accounts payable (A.P.)")
        values = np.full(28, (1.0 - 0.0612) / 27)
        values[j_ap] = 0.0612
        table = format_relevance_table(schema, GlobalWeights(values))
        assert table.splitlines()[0] == "Accounts payable (A.P.) 6.12"
