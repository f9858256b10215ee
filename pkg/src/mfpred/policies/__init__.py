"""The three policy models: constant velocity, history-only social pooling,
and its future-conditional extension."""

from .config import CspConfig, RunConfig, TrainConfig, config_hash, load_config, save_config
from .csp import (
    CspPolicy,
    FccspPolicy,
    FUTURE_PARAM_NAMES,
    HISTORY_PARAM_NAMES,
    csp_forward,
    fccsp_forward,
    init_csp_params,
    init_fccsp_params,
    predict_batch,
    top_mode_means_batch,
    training_outputs,
    zero_future_branch,
)
from .cv import CvPolicy, cv_predict
from .features import (
    FutureSpec,
    SampleSpec,
    future_means_from_predictions,
    maneuver_label,
    prepare_futures,
    prepare_sample,
)
from .grids import SocialGridTensor, assign_cells, build_future_grid, build_history_grid, cell_index
from .training import PreparedSegment, prepare_segment, train_policies

__all__ = [
    "CspConfig",
    "TrainConfig",
    "RunConfig",
    "load_config",
    "save_config",
    "config_hash",
    "cv_predict",
    "CvPolicy",
    "csp_forward",
    "fccsp_forward",
    "CspPolicy",
    "FccspPolicy",
    "init_csp_params",
    "init_fccsp_params",
    "predict_batch",
    "top_mode_means_batch",
    "training_outputs",
    "zero_future_branch",
    "HISTORY_PARAM_NAMES",
    "FUTURE_PARAM_NAMES",
    "SampleSpec",
    "FutureSpec",
    "prepare_sample",
    "prepare_futures",
    "future_means_from_predictions",
    "maneuver_label",
    "cell_index",
    "assign_cells",
    "build_history_grid",
    "build_future_grid",
    "SocialGridTensor",
    "train_policies",
    "prepare_segment",
    "PreparedSegment",
]
