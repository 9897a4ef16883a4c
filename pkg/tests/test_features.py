import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import column_stats_naive, pearson_naive, true_features_naive
from vizpick.errors import EmptySequence, LengthMismatch, WrongArity
from vizpick.features import (
    FEATURE_NAMES,
    N_FEATURES,
    column_stats,
    features_from_dict,
    features_to_dict,
    pearson_r,
    table_aggregate,
    true_features,
)
from vizpick.tables import DataTable, normalize


class TestSchema:
    def test_names(self):
        assert len(FEATURE_NAMES) == N_FEATURES == 26
        assert FEATURE_NAMES[0] == "min_of_min"
        assert FEATURE_NAMES[12] == "mean_of_mean"
        assert FEATURE_NAMES[24] == "mad_of_skew"
        assert FEATURE_NAMES[25] == "pearson_r"

    def test_dict_roundtrip(self):
        vec = np.arange(26, dtype=np.float64)
        assert np.array_equal(features_from_dict(features_to_dict(vec)), vec)

    def test_dict_rejects_wrong_schema(self):
        with pytest.raises(WrongArity):
            features_from_dict({"min_of_min": 1.0})


class TestColumnStats:
    def test_hand_oracle(self):
        mn, mx, mean, std, skew = column_stats([0, 0.5, 1])
        assert (mn, mx, mean) == (0, 1, 0.5)
        assert std == pytest.approx(math.sqrt(1 / 6), abs=1e-15)
        assert skew == 0.0

    def test_constant_sequence(self):
        assert np.array_equal(column_stats([7, 7, 7, 7, 7]), [7, 7, 7, 0, 0])

    def test_skew_against_moment_oracle(self):
        values = [0, 0, 0, 1]
        got = column_stats(values)
        want = column_stats_naive(values)
        assert got[4] == pytest.approx(want[4], rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptySequence):
            column_stats([])


class TestTableAggregate:
    def test_identical_columns_zero_dispersion(self):
        cs = column_stats([0.1, 0.5, 0.9])
        out = table_aggregate([cs, cs])
        for a, agg in enumerate(("min", "max", "mean", "std", "mad")):
            for s in range(5):
                if agg in ("std", "mad"):
                    assert out[5 * a + s] == 0.0

    def test_single_column(self):
        cs = column_stats([0.1, 0.2, 0.9])
        out = table_aggregate([cs])
        for s in range(5):
            assert out[0 + s] == out[5 + s] == out[10 + s] == cs[s]
            assert out[15 + s] == out[20 + s] == 0.0

    def test_mad_hand_oracle(self):
        stats = [column_stats([0.2] * 4), column_stats([0.6] * 4)]
        out = table_aggregate(stats)
        assert out[12] == pytest.approx(0.4)  # mean_of_mean
        assert out[22] == pytest.approx(0.2)  # mad_of_mean

    def test_wrong_shape(self):
        with pytest.raises(WrongArity):
            table_aggregate(np.zeros((2, 4)))


class TestPearson:
    def test_perfect_positive(self):
        assert pearson_r([0, 0.5, 1], [0, 0.5, 1]) == pytest.approx(1.0, abs=1e-12)

    def test_perfect_negative(self):
        assert pearson_r([0, 0.5, 1], [1, 0.5, 0]) == pytest.approx(-1.0, abs=1e-12)

    def test_orthogonal(self):
        assert pearson_r([0, 1, 0, 1], [0, 0, 1, 1]) == pytest.approx(0.0, abs=1e-15)

    def test_degenerate_variance(self):
        assert pearson_r([1, 1, 1], [0, 1, 2]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            pearson_r([1, 2], [1, 2, 3])

    @given(
        values=st.lists(
            st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=3, max_size=50
        ),
        a=st.floats(min_value=0.01, max_value=50, allow_nan=False),
        b=st.floats(min_value=-10, max_value=10, allow_nan=False),
        sign=st.sampled_from([1.0, -1.0]),
    )
    @settings(max_examples=60)
    def test_affine_map_gives_sign(self, values, a, b, sign):
        x = np.asarray(values)
        if ((x - x.mean()) ** 2).sum() < 1e-6:
            return
        y = sign * a * x + b
        assert pearson_r(x, y) == pytest.approx(sign, abs=1e-9)


class TestTrueFeatures:
    def test_length(self, rng):
        from conftest import random_table

        t = random_table(rng, normalized=True)
        assert true_features(t).shape == (26,)

    def test_identical_columns(self):
        col = [0, 0.25, 0.5, 0.75, 1]
        t = DataTable.build("t", [("x", col), ("y", col)])
        feats = true_features(t)
        assert feats[25] == pytest.approx(1.0, abs=1e-12)
        for a in (3, 4):  # std-of-S and mad-of-S blocks
            for s in range(5):
                assert feats[5 * a + s] == 0.0

    def test_wrong_arity(self):
        t = DataTable.build("t", [("x", [1, 2]), ("y", [1, 2]), ("z", [1, 2])])
        with pytest.raises(WrongArity):
            true_features(t)

    def test_oracle_equivalence_random(self, rng):
        from conftest import random_table

        for i in range(20):
            t = normalize(random_table(rng, table_id=f"t{i}"))
            got = true_features(t)
            want = true_features_naive([list(t.column_values(0)), list(t.column_values(1))])
            np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-12)

    def test_row_permutation_invariance(self, rng):
        from conftest import random_table

        t = normalize(random_table(rng))
        perm = rng.permutation(t.n_rows)
        t2 = DataTable.build(
            "p", [(c.name, c.values[perm]) for c in t.columns]
        )
        np.testing.assert_allclose(true_features(t2), true_features(t), rtol=1e-10, atol=1e-12)

    def test_column_swap_invariance(self, rng):
        from conftest import random_table

        t = normalize(random_table(rng))
        swapped = DataTable.build("s", [(c.name, c.values) for c in reversed(t.columns)])
        assert np.array_equal(true_features(swapped), true_features(t))

    def test_minmax_anchors_for_normalized_nonconstant(self, rng):
        from conftest import random_table

        feats = true_features(normalize(random_table(rng)))
        assert feats[FEATURE_NAMES.index("min_of_min")] == 0.0
        assert feats[FEATURE_NAMES.index("max_of_max")] == 1.0
        # S=min entries in [0,1), S=max entries in (0,1]
        for a in range(3):  # min/max/mean aggregates are averages of column stats
            assert 0.0 <= feats[5 * a + 0] < 1.0
            assert 0.0 < feats[5 * a + 1] <= 1.0
