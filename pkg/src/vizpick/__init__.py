"""Chart recommendation by statistical recoverability.

Render scatter/line/density candidates of a numeric table, regress the
table's aggregate statistics back out of each image with a per-type trained
convolutional network, and recommend the chart with the lowest recovery loss.
"""

from .errors import VizPickError
from .estimators import ChartRecommender, ImageStatsRegressor
from .evaluation import (
    CsiRating,
    JudgmentRecord,
    Metrics,
    PointsTally,
    Task,
    TaskKind,
    aggregate_tally,
    build_tasks,
    metrics,
    score_csi,
    score_ft,
    true_fraction,
)
from .features import (
    FEATURE_NAMES,
    N_FEATURES,
    column_stats,
    features_from_dict,
    features_to_dict,
    pearson_r,
    table_aggregate,
    true_features,
)
from .regressor import (
    ConvRegressor,
    default_architecture,
    grad_check,
    init_model,
    loss_smooth_l1_weighted,
    predict_ensemble,
    reduced_architecture,
)
from .render import PlotImage, RenderConfig, render, render_candidates, to_pgm_bytes, write_png
from .selector import Recommendation, Scoring, l1_norm_loss, select, topk_loss
from .synth import SyntheticSpec, generate_corpus, write_corpus
from .tables import (
    CANONICAL_PLOT_ORDER,
    DataTable,
    DatasetSplit,
    PlotType,
    normalize,
    parse_table,
    split_dataset,
    split_series,
)
from .training import ModelBundle, TrainConfig, load_bundle, save_bundle, train

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_PLOT_ORDER",
    "ChartRecommender",
    "ConvRegressor",
    "CsiRating",
    "DataTable",
    "DatasetSplit",
    "FEATURE_NAMES",
    "ImageStatsRegressor",
    "JudgmentRecord",
    "Metrics",
    "ModelBundle",
    "N_FEATURES",
    "PlotImage",
    "PlotType",
    "PointsTally",
    "Recommendation",
    "RenderConfig",
    "Scoring",
    "SyntheticSpec",
    "Task",
    "TaskKind",
    "TrainConfig",
    "VizPickError",
    "aggregate_tally",
    "build_tasks",
    "column_stats",
    "default_architecture",
    "features_from_dict",
    "features_to_dict",
    "generate_corpus",
    "grad_check",
    "init_model",
    "l1_norm_loss",
    "load_bundle",
    "loss_smooth_l1_weighted",
    "metrics",
    "normalize",
    "parse_table",
    "pearson_r",
    "predict_ensemble",
    "reduced_architecture",
    "render",
    "render_candidates",
    "save_bundle",
    "score_csi",
    "score_ft",
    "select",
    "split_dataset",
    "split_series",
    "table_aggregate",
    "to_pgm_bytes",
    "topk_loss",
    "train",
    "true_features",
    "true_fraction",
    "write_corpus",
    "write_png",
]
