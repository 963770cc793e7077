"""NumPy reference implementations of the decoder layer kernels.

Every function here has a one-to-one compiled counterpart in ``_kernels``;
the two are interchangeable behind :mod:`dce.decoder.backend`. Shapes follow
the (channels, freq, time) tensor convention. The 1x1 convolution is a plain
matrix product over the channel axis and stays BLAS-backed in both backends.
"""

from __future__ import annotations

import numpy as np

from .plans import UpsamplePlan

BACKEND_NAME = "numpy"


def conv_fwd(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    c_in, f, t = x.shape
    if w.shape[1] != c_in:
        raise ValueError(f"kernel expects {w.shape[1]} input channels, got {c_in}")
    return (w @ x.reshape(c_in, f * t)).reshape(w.shape[0], f, t)


def conv_bwd(x: np.ndarray, w: np.ndarray, gy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c_in, f, t = x.shape
    gy_m = gy.reshape(w.shape[0], f * t)
    gx = (w.T @ gy_m).reshape(c_in, f, t)
    gw = gy_m @ x.reshape(c_in, f * t).T
    return gx, gw


def upsample_fwd(x: np.ndarray, pf: UpsamplePlan, pt: UpsamplePlan) -> np.ndarray:
    yf = np.matmul(pf.matrix[None, :, :], x)
    return np.matmul(yf, pt.matrix.T[None, :, :])


def upsample_bwd(gy: np.ndarray, pf: UpsamplePlan, pt: UpsamplePlan) -> np.ndarray:
    gt = np.matmul(gy, pt.matrix[None, :, :])
    return np.matmul(pf.matrix.T[None, :, :], gt)


def relu_fwd(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_bwd(x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    return gy * (x > 0.0)


def bn_fwd(
    x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-channel normalization over all freq/time positions (batch of 1).

    Returns (y, xhat, inv_std); xhat and inv_std feed the backward pass.
    """
    if x.shape[1] * x.shape[2] < 2:
        raise ValueError("batchnorm needs at least 2 positions per channel")
    mu = x.mean(axis=(1, 2), keepdims=True)
    var = x.var(axis=(1, 2), keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std
    y = gamma[:, None, None] * xhat + beta[:, None, None]
    return y, xhat, inv_std.reshape(-1)


def bn_bwd(
    xhat: np.ndarray, inv_std: np.ndarray, gamma: np.ndarray, gy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients through the normalization, including the mean/variance paths."""
    g_gamma = np.sum(gy * xhat, axis=(1, 2))
    g_beta = np.sum(gy, axis=(1, 2))
    g_mean = gy.mean(axis=(1, 2), keepdims=True)
    gx_mean = (gy * xhat).mean(axis=(1, 2), keepdims=True)
    scale = (gamma * inv_std)[:, None, None]
    gx = scale * (gy - g_mean - xhat * gx_mean)
    return gx, g_gamma, g_beta
