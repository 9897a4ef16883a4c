import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import random_table
from vizpick.estimators import ChartRecommender, ImageStatsRegressor
from vizpick.features import N_FEATURES


class TestImageStatsRegressor:
    def _data(self, rng, n=8, side=32):
        X = rng.uniform(0, 1, (n, side, side))
        y = rng.uniform(0, 1, (n, N_FEATURES))
        return X, y

    def test_get_params_roundtrip(self):
        est = ImageStatsRegressor(epochs=3, seed=9)
        params = est.get_params()
        assert params["epochs"] == 3 and params["seed"] == 9
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_fit_predict_shapes(self, rng):
        X, y = self._data(rng)
        est = ImageStatsRegressor(epochs=1, batch_size=4).fit(X, y)
        out = est.predict(X)
        assert out.shape == (8, N_FEATURES)
        assert np.isfinite(out).all()

    def test_unfitted_predict_raises(self, rng):
        X, _ = self._data(rng)
        with pytest.raises(NotFittedError):
            ImageStatsRegressor().predict(X)

    def test_bad_shapes_rejected(self, rng):
        est = ImageStatsRegressor(epochs=1)
        with pytest.raises(ValueError):
            est.fit(rng.uniform(0, 1, (4, 3, 8, 8)), rng.uniform(0, 1, (4, N_FEATURES)))
        with pytest.raises(ValueError):
            est.fit(rng.uniform(0, 1, (4, 8, 8)), rng.uniform(0, 1, (4, 7)))

    def test_deterministic_fit(self, rng):
        X, y = self._data(rng)
        a = ImageStatsRegressor(epochs=2, seed=1).fit(X, y).predict(X)
        b = ImageStatsRegressor(epochs=2, seed=1).fit(X, y).predict(X)
        assert np.array_equal(a, b)

    def test_training_reduces_loss(self, rng):
        X, y = self._data(rng, n=16)
        est = ImageStatsRegressor(epochs=25, batch_size=8, seed=0).fit(X, y)
        assert est.history_["final_train_loss"] < est.history_["initial_train_loss"]


class TestChartRecommender:
    def test_fit_predict_types(self, rng):
        tables = [random_table(rng, n_rows=15, table_id=f"t{i}") for i in range(4)]
        rec = ChartRecommender(epochs=1, seed=0).fit(tables)
        preds = rec.predict(tables)
        assert preds.shape == (4,)
        assert set(preds) <= {"scatter", "line", "density"}

    def test_recommend_full_breakdown(self, rng):
        tables = [random_table(rng, n_rows=15, table_id=f"t{i}") for i in range(3)]
        rec = ChartRecommender(epochs=1, seed=0, scoring="top5").fit(tables)
        r = rec.recommend(tables[0])
        assert r.table_id == tables[0].id
        assert set(r.scores.losses) == set(r.predicted)

    def test_rejects_non_tables(self):
        with pytest.raises(ValueError):
            ChartRecommender(epochs=1).fit([1, 2, 3])

    def test_clone_keeps_params(self):
        rec = ChartRecommender(epochs=7, scoring="l1", seed=3)
        assert clone(rec).get_params()["scoring"] == "l1"
