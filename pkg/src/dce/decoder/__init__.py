"""Untrained decoder network with hand-derived gradients and per-grid fitting."""

from .backend import active_backend, compiled_available
from .gradcheck import GradCheckResult, finite_difference_check
from .net import (
    AdamState,
    DecoderArch,
    DecoderParams,
    FitReport,
    NonFiniteLoss,
    adam_init,
    adam_step,
    decoder_backward,
    decoder_forward,
    draw_input,
    fit,
    init_params,
    weight_count,
)
from .ops import (
    DEFAULT_BN_EPS,
    batchnorm_forward,
    conv1x1_forward,
    relu_forward,
    upsample2x_forward,
)

__all__ = [
    "AdamState",
    "DecoderArch",
    "DecoderParams",
    "FitReport",
    "GradCheckResult",
    "NonFiniteLoss",
    "DEFAULT_BN_EPS",
    "active_backend",
    "adam_init",
    "adam_step",
    "batchnorm_forward",
    "compiled_available",
    "conv1x1_forward",
    "decoder_backward",
    "decoder_forward",
    "draw_input",
    "finite_difference_check",
    "fit",
    "init_params",
    "relu_forward",
    "upsample2x_forward",
    "weight_count",
]
