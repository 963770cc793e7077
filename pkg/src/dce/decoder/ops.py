"""Public layer operations of the decoder network.

Thin wrappers over the selected kernel backend; these are the building blocks
the network composes, exposed individually so each can be tested against
brute-force oracles and finite differences.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .plans import upsample_plan

DEFAULT_BN_EPS = 1e-5


def conv1x1_forward(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Apply the shared channel-mixing matrix at every grid position."""
    return backend.conv_fwd(np.ascontiguousarray(x, dtype=np.float64), w)


def upsample2x_forward(x: np.ndarray) -> np.ndarray:
    """Double the freq and time axes by separable bilinear interpolation."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    return backend.upsample_fwd(x, upsample_plan(x.shape[1]), upsample_plan(x.shape[2]))


def relu_forward(x: np.ndarray) -> np.ndarray:
    return backend.relu_fwd(np.ascontiguousarray(x, dtype=np.float64))


def batchnorm_forward(
    x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = DEFAULT_BN_EPS
) -> np.ndarray:
    """Normalize each channel over its freq/time positions, then scale/shift.

    Statistics are always recomputed from the input (single-grid batch); there
    is no inference mode or running average.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y, _, _ = backend.bn_fwd(x, np.asarray(gamma, float), np.asarray(beta, float), eps)
    return y
