import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbrisk.dataset import DataError
from cbrisk.similarity import (
    GlobalWeights,
    LocalParams,
    SimilarityModel,
    batch_similarity,
    batch_similarity_values,
    euclidean_similarity,
    grey_context,
    grey_similarity,
    local_similarity,
    manhattan_similarity,
    pair_similarity,
)

from conftest import make_dataset

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
expo = st.floats(min_value=0.1, max_value=10.0, allow_nan=False)


class TestLocalSimilarity:
    def test_worked_value_below(self):
        assert local_similarity(0.0175, 0.0125, 4.90, 7.18) == pytest.approx(
            0.9757, abs=1e-4
        )

    def test_worked_value_above(self):
        assert local_similarity(0.0143, 0.0153, 4.90, 7.18) == pytest.approx(
            0.9928, abs=1e-4
        )

    def test_identity(self):
        for a, b in [(1, 1), (2.5, 0.3), (9.9, 0.1)]:
            assert local_similarity(0.42, 0.42, a, b) == 1.0

    def test_unit_exponents_quarter(self):
        assert local_similarity(0.5, 0.25, 1.0, 1.0) == pytest.approx(0.75)
        assert local_similarity(0.25, 0.5, 1.0, 1.0) == pytest.approx(0.75)

    def test_asymmetric_quarter(self):
        # reference a quarter below vs a quarter above the query
        assert local_similarity(0.5, 0.25, 2.12, 5.53) == pytest.approx(0.54, abs=0.01)
        assert local_similarity(0.25, 0.5, 2.12, 5.53) == pytest.approx(0.20, abs=0.01)

    def test_flipped_convention_swaps_sides(self):
        std = local_similarity(0.5, 0.25, 2.12, 5.53)
        flipped = local_similarity(
            0.25, 0.5, 2.12, 5.53, branch_convention="flipped"
        )
        assert std == flipped

    def test_missing_value(self):
        assert local_similarity(np.nan, 0.3, 1, 1) == 0.0
        assert local_similarity(0.3, np.nan, 1, 1, missing_sim=0.1) == 0.1
        assert local_similarity(np.nan, np.nan, 1, 1, missing_sim=1.0) == 1.0

    def test_bad_exponents(self):
        with pytest.raises(DataError):
            local_similarity(0.1, 0.2, 0.0, 1.0)
        with pytest.raises(DataError):
            local_similarity(0.1, 0.2, 1.0, math.inf)

    @given(q=unit, c=unit, a=expo, b=expo)
    @settings(max_examples=200)
    def test_bounds_and_identity(self, q, c, a, b):
        s = local_similarity(q, c, a, b)
        assert 0.0 <= s <= 1.0
        if q == c:
            assert s == 1.0
        elif abs(q - c) >= 1e-9:  # below this, pow can round back to 1.0
            assert s < 1.0

    @given(c1=unit, c2=unit, q=unit, a=expo, b=expo)
    @settings(max_examples=200)
    def test_monotone_in_distance(self, c1, c2, q, a, b):
        # same branch, larger distance -> no larger similarity
        lo, hi = sorted([c1, c2])
        below = local_similarity(q, q * lo, a, b)  # both refs <= q
        below_far = local_similarity(q, 0.0, a, b)
        assert below_far <= below + 1e-12 or q == 0


class TestGlobalAsymmetric:
    def test_identical_cases(self):
        w = GlobalWeights(np.array([0.3, 0.7]))
        m = SimilarityModel.acbr(w, LocalParams(np.array([2.0, 3.0]), np.array([1.0, 4.0])))
        v = np.array([0.2, 0.9])
        assert pair_similarity(v, v, m) == 1.0

    def test_all_zero_locals(self):
        w = GlobalWeights.uniform(2)
        m = SimilarityModel.acbr(w, LocalParams.unit(2))
        assert pair_similarity(np.array([0.0, 0.0]), np.array([1.0, 1.0]), m) == 0.0

    def test_hand_value(self):
        # local sims 0.6 and 0.8 under unit exponents, equal weights
        w = GlobalWeights(np.array([0.5, 0.5]))
        m = SimilarityModel.acbr(w, LocalParams.unit(2))
        q = np.array([0.5, 0.5])
        c = np.array([0.9, 0.7])
        expected = math.sqrt(0.5 * 0.36 + 0.5 * 0.64)
        assert pair_similarity(q, c, m) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.7071, abs=1e-4)

    def test_weight_length_mismatch(self):
        m = SimilarityModel.acbr(GlobalWeights.uniform(2), LocalParams.unit(2))
        with pytest.raises(DataError):
            pair_similarity(np.array([0.1]), np.array([0.2]), m)

    def test_missing_slot_contributes_missing_sim(self):
        w = GlobalWeights(np.array([0.5, 0.5]))
        for ms in (0.0, 0.4, 1.0):
            m = SimilarityModel.acbr(w, LocalParams.unit(2), missing_sim=ms)
            q = np.array([np.nan, 0.5])
            c = np.array([0.2, 0.5])
            expected = math.sqrt(0.5 * ms * ms + 0.5 * 1.0)
            assert pair_similarity(q, c, m) == pytest.approx(expected, abs=1e-12)


class TestDistanceVariants:
    def test_ecbr_identity(self):
        w = GlobalWeights.uniform(3)
        v = np.array([0.1, 0.5, 0.9])
        assert euclidean_similarity(v, v, w) == 1.0

    def test_ecbr_hand_values(self):
        w1 = GlobalWeights(np.array([1.0]))
        assert euclidean_similarity(np.array([0.0]), np.array([1.0]), w1) == 0.5
        w2 = GlobalWeights(np.array([0.5, 0.5]))
        got = euclidean_similarity(np.array([0.2, 0.0]), np.array([0.4, 0.4]), w2)
        expected = 1.0 / (1.0 + math.sqrt(0.01 + 0.04))
        assert got == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.8172, abs=1e-4)

    def test_mcbr_hand_values(self):
        w2 = GlobalWeights(np.array([0.5, 0.5]))
        got = manhattan_similarity(np.array([0.2, 0.0]), np.array([0.4, 0.4]), w2)
        assert got == pytest.approx(1.0 / 1.3, abs=1e-12)
        assert got == pytest.approx(0.7692, abs=1e-4)
        w1 = GlobalWeights(np.array([1.0]))
        assert manhattan_similarity(np.array([0.0]), np.array([1.0]), w1) == 0.5

    def test_distance_variant_bounds(self):
        rng = np.random.default_rng(0)
        w = GlobalWeights.uniform(4)
        for _ in range(100):
            q, c = rng.random(4), rng.random(4)
            for fn in (euclidean_similarity, manhattan_similarity):
                s = fn(q, c, w)
                assert 0.0 < s <= 1.0
                if not np.allclose(q, c):
                    assert s < 1.0

    def test_grey_degree_cases(self):
        w1 = GlobalWeights(np.array([1.0]))
        # dist 0 -> degree 1 -> similarity 1
        s = grey_similarity(
            np.array([0.5]), np.array([0.5]), np.array([0.0]), np.array([0.6]), w1
        )
        assert s == 1.0
        # inf 0, sup 1, dist 1 -> degree 1/3, sim = (1 * 1/3)^... = w * deg^2
        s = grey_similarity(
            np.array([0.0]), np.array([1.0]), np.array([0.0]), np.array([1.0]), w1
        )
        assert s == pytest.approx((1.0 / 3.0) ** 2, abs=1e-12)

    def test_grey_degenerate_all_equal(self):
        w1 = GlobalWeights(np.array([1.0]))
        s = grey_similarity(
            np.array([0.5]), np.array([0.5]), np.array([0.0]), np.array([0.0]), w1
        )
        assert s == 1.0

    def test_grey_context(self):
        R = np.array([[0.1], [0.4], [0.9]])
        inf, sup = grey_context(np.array([0.5]), R)
        assert inf[0] == pytest.approx(0.1)
        assert sup[0] == pytest.approx(0.4)


class TestVariantReductions:
    def test_acbr_unit_equals_epcbr_and_ewcbr(self):
        rng = np.random.default_rng(5)
        L = 6
        raw = rng.random(L)
        w = GlobalWeights.normalized(raw)
        acbr = SimilarityModel.acbr(w, LocalParams.unit(L))
        epcbr = SimilarityModel.epcbr(w)
        ew_acbr = SimilarityModel.acbr(GlobalWeights.uniform(L), LocalParams.unit(L))
        ewcbr = SimilarityModel.ewcbr(L)
        for _ in range(200):
            q, c = rng.random(L), rng.random(L)
            assert abs(pair_similarity(q, c, acbr) - pair_similarity(q, c, epcbr)) < 1e-12
            assert abs(pair_similarity(q, c, ew_acbr) - pair_similarity(q, c, ewcbr)) < 1e-12

    def test_symmetry_when_exponents_equal(self):
        rng = np.random.default_rng(6)
        L = 4
        e = rng.uniform(0.1, 10, L)
        m = SimilarityModel.acbr(
            GlobalWeights.uniform(L), LocalParams(below=e, above=e.copy())
        )
        for _ in range(200):
            q, c = rng.random(L), rng.random(L)
            assert pair_similarity(q, c, m) == pytest.approx(
                pair_similarity(c, q, m), abs=1e-15
            )


class TestBatch:
    def _random_model(self, L, seed=0, variant="acbr"):
        rng = np.random.default_rng(seed)
        w = GlobalWeights.normalized(rng.random(L) + 0.1)
        local = None
        if variant in ("acbr", "ewcbr", "epcbr"):
            if variant == "acbr":
                local = LocalParams(rng.uniform(0.1, 10, L), rng.uniform(0.1, 10, L))
            else:
                local = LocalParams.unit(L)
        if variant == "ewcbr":
            w = GlobalWeights.uniform(L)
        return SimilarityModel(variant=variant, weights=w, local=local)

    def test_single_pair_matches_scalar(self):
        L = 5
        m = self._random_model(L, 1)
        rng = np.random.default_rng(2)
        q, c = rng.random((1, L)), rng.random((1, L))
        queries = make_dataset(q, [0])
        refs = make_dataset(c, [1])
        mat = batch_similarity(queries, refs, m)
        assert mat.shape == (1, 1)
        assert mat[0, 0] == pair_similarity(q[0], c[0], m)

    def test_worker_counts_identical(self):
        L = 4
        m = self._random_model(L, 3)
        rng = np.random.default_rng(4)
        Q, R = rng.random((37, L)), rng.random((23, L))
        base = batch_similarity_values(Q, R, m, workers=1)
        for workers in (2, 4, 8):
            assert np.array_equal(base, batch_similarity_values(Q, R, m, workers=workers))

    @pytest.mark.parametrize("variant", ["acbr", "ecbr", "mcbr", "gcbr"])
    def test_matches_serial_double_loop(self, variant):
        L = 3
        m = self._random_model(L, 7, variant=variant)
        rng = np.random.default_rng(8)
        Q, R = rng.random((2, L)), rng.random((3, L))
        mat = batch_similarity_values(Q, R, m, workers=2)
        for i in range(2):
            if variant == "gcbr":
                inf, sup = grey_context(Q[i], R)
            for j in range(3):
                if variant == "acbr":
                    expected = pair_similarity(Q[i], R[j], m)
                elif variant == "ecbr":
                    expected = euclidean_similarity(Q[i], R[j], m.weights)
                elif variant == "mcbr":
                    expected = manhattan_similarity(Q[i], R[j], m.weights)
                else:
                    expected = grey_similarity(Q[i], R[j], inf, sup, m.weights)
                assert mat[i, j] == expected

    def test_schema_mismatch(self):
        m = self._random_model(2, 1)
        from cbrisk.dataset import FeatureSchema

        q = make_dataset(np.zeros((1, 2)), [0])
        r = make_dataset(
            np.zeros((1, 2)), [0], schema=FeatureSchema(names=("A", "B"))
        )
        with pytest.raises(DataError, match="schema"):
            batch_similarity(q, r, m)

    def test_entries_in_unit_interval(self):
        rng = np.random.default_rng(9)
        for variant in ("acbr", "ecbr", "mcbr", "gcbr"):
            m = self._random_model(4, 10, variant=variant)
            Q, R = rng.random((10, 4)), rng.random((15, 4))
            mat = batch_similarity_values(Q, R, m)
            assert (mat >= 0).all() and (mat <= 1 + 1e-12).all()

    def test_matrix_csv_export(self, tmp_path):
        import csv

        from cbrisk.similarity import export_similarity_csv

        rng = np.random.default_rng(11)
        mat = rng.random((2, 3))
        path = tmp_path / "sims.csv"
        export_similarity_csv(mat, ["q1", "q2"], ["r1", "r2", "r3"], path)
        with path.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["id", "r1", "r2", "r3"]
        assert rows[1][0] == "q1"
        assert [float(v) for v in rows[1][1:]] == list(mat[0])
        assert float(rows[2][2]) == mat[1, 1]
