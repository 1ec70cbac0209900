"""Sample-level adaptive fusion of time-series forecasts.

The pipeline: describe each input window with 24 meta-features, learn a
linear+softmax fusor that maps those features to per-model weights, and
combine a zoo's stored predictions into one forecast per sample. Static
ensembles, selection baselines, and evaluation reports round out the
toolkit.
"""

from .baselines import (
    RankFirstReport,
    ValidationScoreTable,
    forward_selection_ensemble,
    mean_ensemble,
    median_ensemble,
    rank_first_analysis,
    synthetic_zoo_forecast,
    topk_select,
    validation_scores,
    zeroshot_similarity_ensemble,
    zoo_prediction_tensor,
)
from .dataset import (
    JointMetaDataset,
    MetaBatch,
    MetaSample,
    MetaShard,
    PredictionTensor,
    batch_iterator,
    build_joint_dataset,
    collect_meta_sample,
)
from .errors import TimefuseError
from .evaluation import (
    Metrics,
    ZeroShotReport,
    compute_metrics,
    evaluate_methods,
    fused_predictions,
    leaderboard_csv,
    zero_shot_protocol,
)
from .features import (
    FEATURE_NAMES,
    N_FEATURES,
    SpectralProfile,
    TimeSeriesWindow,
    adf_stationarity_ratio,
    ar1_fit,
    autocorrelation,
    extract_many,
    extract_meta_features,
    multivariate_features,
    rate_of_change,
    spectral_features,
    spectral_profile,
    statistical_features,
)
from .fusor import (
    FusorModel,
    TrainConfig,
    export_theta,
    fuse,
    huber_loss,
    load_model,
    predict_weights,
    predict_weights_batch,
    save_model,
    standardize_features,
    train_fusor,
)
from .shard_io import read_shard, write_shard
from .stationarity import adf_lag_order, adf_test, mackinnon_pvalue

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES",
    "N_FEATURES",
    "FusorModel",
    "JointMetaDataset",
    "MetaBatch",
    "MetaSample",
    "MetaShard",
    "Metrics",
    "PredictionTensor",
    "RankFirstReport",
    "SpectralProfile",
    "TimeSeriesWindow",
    "TimefuseError",
    "TrainConfig",
    "ValidationScoreTable",
    "ZeroShotReport",
    "adf_lag_order",
    "adf_stationarity_ratio",
    "adf_test",
    "ar1_fit",
    "autocorrelation",
    "batch_iterator",
    "build_joint_dataset",
    "collect_meta_sample",
    "compute_metrics",
    "evaluate_methods",
    "export_theta",
    "extract_many",
    "extract_meta_features",
    "forward_selection_ensemble",
    "fuse",
    "fused_predictions",
    "huber_loss",
    "leaderboard_csv",
    "load_model",
    "mackinnon_pvalue",
    "mean_ensemble",
    "median_ensemble",
    "multivariate_features",
    "predict_weights",
    "predict_weights_batch",
    "rank_first_analysis",
    "rate_of_change",
    "read_shard",
    "save_model",
    "spectral_features",
    "spectral_profile",
    "standardize_features",
    "statistical_features",
    "synthetic_zoo_forecast",
    "topk_select",
    "train_fusor",
    "validation_scores",
    "write_shard",
    "zero_shot_protocol",
    "zeroshot_similarity_ensemble",
    "zoo_prediction_tensor",
]
