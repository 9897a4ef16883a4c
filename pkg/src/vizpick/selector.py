"""Score candidate charts by feature-recovery loss and recommend the argmin type.

Both losses normalize per-feature errors by the training means (clamped at
eps) and accumulate in ascending feature-index order, so topk with k = 26 is
bitwise identical to the plain normalized L1 loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyEnsemble, KOutOfRange, MissingModel
from .features import features_to_dict, true_features
from .regressor import predict_ensemble
from .render import RenderConfig, render_candidates
from .tables import CANONICAL_PLOT_ORDER, DataTable, PlotType
from .training import ModelBundle

DEFAULT_EPS = 1e-3


@dataclass(frozen=True)
class Scoring:
    kind: str  # "l1" | "topk"
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("l1", "topk"):
            raise ValueError(f"unknown scoring kind {self.kind!r}")
        if self.kind == "topk" and (self.k is None or self.k < 1):
            raise KOutOfRange(f"topk scoring needs k >= 1, got {self.k}")

    @classmethod
    def l1(cls) -> "Scoring":
        return cls("l1")

    @classmethod
    def topk(cls, k: int) -> "Scoring":
        return cls("topk", k)

    @property
    def label(self) -> str:
        return "l1" if self.kind == "l1" else f"top{self.k}"


def parse_scoring(text: str) -> Scoring:
    text = text.strip().lower()
    if text == "l1":
        return Scoring.l1()
    if text.startswith("top"):
        try:
            return Scoring.topk(int(text[3:]))
        except ValueError:
            pass
    raise ValueError(f"cannot parse scoring {text!r}; use 'l1' or 'topK' (e.g. top5)")


def normalized_errors(
    y_pred: np.ndarray, y_true: np.ndarray, t_bar: np.ndarray, eps: float = DEFAULT_EPS
) -> np.ndarray:
    pred = np.asarray(y_pred, dtype=np.float64)
    true = np.asarray(y_true, dtype=np.float64)
    denom = np.maximum(np.abs(np.asarray(t_bar, dtype=np.float64)), eps)
    return np.abs(pred - true) / denom


def l1_norm_loss(
    y_pred: np.ndarray, y_true: np.ndarray, t_bar: np.ndarray, eps: float = DEFAULT_EPS
) -> float:
    total = 0.0
    for e in normalized_errors(y_pred, y_true, t_bar, eps):
        total += float(e)
    return total


def topk_loss(
    y_pred: np.ndarray, y_true: np.ndarray, t_bar: np.ndarray, k: int, eps: float = DEFAULT_EPS
) -> float:
    """Sum of the k smallest normalized per-feature errors."""
    errs = normalized_errors(y_pred, y_true, t_bar, eps)
    if not 1 <= k <= errs.size:
        raise KOutOfRange(f"k={k} outside 1..{errs.size}")
    chosen = sorted(np.argsort(errs, kind="stable")[:k].tolist())
    total = 0.0
    for i in chosen:
        total += float(errs[i])
    return total


def scoring_loss(
    scoring: Scoring, y_pred: np.ndarray, y_true: np.ndarray, t_bar: np.ndarray, eps: float = DEFAULT_EPS
) -> float:
    if scoring.kind == "l1":
        return l1_norm_loss(y_pred, y_true, t_bar, eps)
    return topk_loss(y_pred, y_true, t_bar, scoring.k, eps)


@dataclass(frozen=True)
class SelectionScore:
    losses: dict[PlotType, float]
    scoring: Scoring


@dataclass(frozen=True)
class Recommendation:
    table_id: str
    chosen: PlotType
    scores: SelectionScore
    predicted: dict[PlotType, np.ndarray]
    true_features: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "table_id": self.table_id,
            "chosen": self.chosen.value,
            "scoring": self.scores.scoring.label,
            "scores": {pt.value: self.scores.losses[pt] for pt in CANONICAL_PLOT_ORDER},
            "predicted": {pt.value: features_to_dict(self.predicted[pt]) for pt in CANONICAL_PLOT_ORDER},
            "true_features": features_to_dict(self.true_features),
        }


def select(
    t: DataTable,
    bundle: "ModelBundle | Sequence[ModelBundle]",
    scoring: Scoring | None = None,
    cfg: RenderConfig | None = None,
    eps: float = DEFAULT_EPS,
) -> Recommendation:
    """Recommend the chart whose own regressor best recovers the true statistics.

    Passing several bundles averages their predictions per plot type
    (prediction-averaging ensemble).  Ties go to the canonical plot order.
    """
    bundles = [bundle] if isinstance(bundle, ModelBundle) else list(bundle)
    if not bundles:
        raise EmptyEnsemble("need at least one model bundle")
    scoring = scoring or Scoring.topk(5)

    feats = true_features(t)
    images = render_candidates(t, cfg)
    t_bar = np.mean([b.t_bar for b in bundles], axis=0)

    losses: dict[PlotType, float] = {}
    predicted: dict[PlotType, np.ndarray] = {}
    for pt in CANONICAL_PLOT_ORDER:
        members = []
        for b in bundles:
            if pt not in b.models:
                raise MissingModel(f"bundle has no model for plot type {pt.value!r}")
            members.append(b.models[pt])
        pred = predict_ensemble(members, images[pt])
        predicted[pt] = pred
        losses[pt] = scoring_loss(scoring, pred, feats, t_bar, eps)

    chosen = min(CANONICAL_PLOT_ORDER, key=lambda p: (losses[p], p.canonical_index))
    return Recommendation(
        table_id=t.id,
        chosen=chosen,
        scores=SelectionScore(losses=losses, scoring=scoring),
        predicted=predicted,
        true_features=feats,
    )
