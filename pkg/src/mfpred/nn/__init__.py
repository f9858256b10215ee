"""Minimal trainable numeric layer set with analytic gradients."""

from .gradcheck import GradCheckReport, finite_difference_check
from .layers import fully_connected, init_fc, init_lstm, lstm_cell, lstm_encode, one_hot, uniform_init
from .losses import LOG_TWO_PI, bivariate_gaussian_nll
from .optim import AdamState, adam_step
from .params import (
    CHECKPOINT_FORMAT_VERSION,
    ParameterStore,
    file_hash,
    load_checkpoint,
    save_checkpoint,
)
from .tensor import (
    Tensor,
    concat,
    exp,
    log,
    conv2d,
    cumsum,
    gather_rows,
    grid_scatter,
    leaky_relu,
    matmul,
    max_pool2d,
    narrow,
    no_grad,
    repeat_interleave,
    reshape,
    sigmoid,
    softmax,
    softmax_cross_entropy,
    tanh,
    tmean,
    tsum,
)

__all__ = [
    "Tensor",
    "no_grad",
    "concat",
    "exp",
    "log",
    "conv2d",
    "cumsum",
    "gather_rows",
    "grid_scatter",
    "leaky_relu",
    "matmul",
    "max_pool2d",
    "narrow",
    "repeat_interleave",
    "reshape",
    "sigmoid",
    "softmax",
    "softmax_cross_entropy",
    "tanh",
    "tmean",
    "tsum",
    "fully_connected",
    "lstm_cell",
    "lstm_encode",
    "init_fc",
    "init_lstm",
    "one_hot",
    "uniform_init",
    "bivariate_gaussian_nll",
    "LOG_TWO_PI",
    "AdamState",
    "adam_step",
    "ParameterStore",
    "save_checkpoint",
    "load_checkpoint",
    "file_hash",
    "CHECKPOINT_FORMAT_VERSION",
    "finite_difference_check",
    "GradCheckReport",
]
