"""Scikit-learn style estimators wrapping the functional core.

ImageStatsRegressor fits one image-to-statistics network on (images,
feature) pairs; ChartRecommender fits the full per-plot-type bundle on raw
tables and predicts plot types.  Both expose get_params/set_params and clone
cleanly, so they compose with sklearn pipelines and model selection.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .features import N_FEATURES
from .regressor import default_architecture, feature_weights, init_model
from .render import RenderConfig
from .selector import Recommendation, parse_scoring, select
from .tables import DataTable, normalize
from .training import TrainConfig, fit_regressor, train


def as_image_batch(X) -> np.ndarray:
    """Coerce (n, H, W) or (n, 1, H, W) input into the NCHW batch layout."""
    arr = np.asarray(X, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[:, None, :, :]
    if arr.ndim != 4 or arr.shape[1] != 1:
        raise ValueError(f"expected (n, H, W) or (n, 1, H, W) images, got shape {arr.shape}")
    return arr


def as_feature_matrix(y, n_rows: int) -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64)
    if arr.shape != (n_rows, N_FEATURES):
        raise ValueError(f"expected a ({n_rows}, {N_FEATURES}) target matrix, got {arr.shape}")
    return arr


def check_tables(tables) -> list[DataTable]:
    tables = list(tables)
    if not tables or not all(isinstance(t, DataTable) for t in tables):
        raise ValueError("expected a non-empty sequence of DataTable")
    return tables


class ImageStatsRegressor(BaseEstimator, RegressorMixin):
    """Maps rendered chart images to the 26 aggregate statistics."""

    def __init__(
        self,
        epochs: int = 30,
        learning_rate: float = 1e-3,
        momentum: float = 0.9,
        batch_size: int = 32,
        seed: int = 0,
        smooth_l1_beta: float = 1.0,
        weight_epsilon: float = 1e-3,
    ):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.batch_size = batch_size
        self.seed = seed
        self.smooth_l1_beta = smooth_l1_beta
        self.weight_epsilon = weight_epsilon

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            smooth_l1_beta=self.smooth_l1_beta,
            weight_epsilon=self.weight_epsilon,
        )

    def fit(self, X, y):
        images = as_image_batch(X)
        targets = as_feature_matrix(y, images.shape[0])
        _, _, h, w = images.shape
        self.model_ = init_model(self.seed, default_architecture(height=h, width=w))
        self.t_bar_ = targets.mean(axis=0)
        weights = feature_weights(self.t_bar_, self.weight_epsilon)
        rng = np.random.default_rng(self.seed)
        self.history_ = fit_regressor(
            self.model_, images, targets.astype(np.float32), weights, self._config(), rng
        )
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        images = as_image_batch(X)
        out = np.empty((images.shape[0], N_FEATURES), dtype=np.float64)
        for start in range(0, images.shape[0], 256):
            out[start : start + 256] = self.model_.forward_batch(images[start : start + 256])
        return out


class ChartRecommender(BaseEstimator):
    """Fits the full per-plot-type bundle on raw tables and predicts plot types."""

    def __init__(
        self,
        epochs: int = 30,
        learning_rate: float = 1e-3,
        momentum: float = 0.9,
        batch_size: int = 32,
        seed: int = 0,
        smooth_l1_beta: float = 1.0,
        weight_epsilon: float = 1e-3,
        scoring: str = "top5",
    ):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.batch_size = batch_size
        self.seed = seed
        self.smooth_l1_beta = smooth_l1_beta
        self.weight_epsilon = weight_epsilon
        self.scoring = scoring

    def fit(self, X: Sequence[DataTable], y=None):
        from .pipeline import training_pairs

        tables = check_tables(X)
        cfg = TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            smooth_l1_beta=self.smooth_l1_beta,
            weight_epsilon=self.weight_epsilon,
        )
        self.bundle_ = train(training_pairs(tables), cfg)
        return self

    def recommend(self, table: DataTable) -> Recommendation:
        check_is_fitted(self, "bundle_")
        return select(normalize(table), self.bundle_, parse_scoring(self.scoring))

    def predict(self, X: Sequence[DataTable]) -> np.ndarray:
        return np.array([self.recommend(t).chosen.value for t in check_tables(X)], dtype=object)
