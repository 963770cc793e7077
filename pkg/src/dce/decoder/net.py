"""The untrained decoder network: architecture, gradients, Adam, and fitting.

The network maps a fixed random input tensor through l hidden layers of
(1x1 conv -> 2x bilinear upsample -> ReLU -> batchnorm); the last hidden
layer drops the upsampler and the output layer is a bare 1x1 conv. Fitting
minimizes the summed squared error against a single target grid with exact
hand-derived reverse-mode gradients and Adam updates; the epoch budget is the
only stopping rule (early stopping by construction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..numerics import RngStream
from . import backend
from .ops import DEFAULT_BN_EPS
from .plans import upsample_plan

Z0_LOW = 0.0
Z0_HIGH = 0.1


class NonFiniteLoss(Exception):
    """The fit objective became NaN/Inf (divergence; retry with a new seed)."""


@dataclass(frozen=True)
class DecoderArch:
    """Static description of one decoder network.

    hidden_layers is the count l of hidden layers; width is the channel count
    of every hidden layer. The input tensor has shape
    (width, out_freq / 2**(l-1), out_time / 2**(l-1)) since all hidden layers
    except the last carry a factor-2 upsampler.
    """

    hidden_layers: int
    width: int
    out_channels: int
    out_freq: int
    out_time: int

    def __post_init__(self) -> None:
        if self.hidden_layers < 2:
            raise ValueError("need at least 2 hidden layers")
        if min(self.width, self.out_channels, self.out_freq, self.out_time) < 1:
            raise ValueError("all dimensions must be positive")
        factor = 2 ** (self.hidden_layers - 1)
        if self.out_freq % factor or self.out_time % factor:
            raise ValueError(
                f"output grid {self.out_freq}x{self.out_time} not divisible by {factor}"
            )

    @property
    def in_freq(self) -> int:
        return self.out_freq // 2 ** (self.hidden_layers - 1)

    @property
    def in_time(self) -> int:
        return self.out_time // 2 ** (self.hidden_layers - 1)

    def conv_shapes(self) -> list[tuple[int, int]]:
        """(out_channels, in_channels) of every conv, input to output layer."""
        shapes = [(self.width, self.width) for _ in range(self.hidden_layers)]
        shapes.append((self.out_channels, self.width))
        return shapes


def weight_count(arch: DecoderArch) -> int:
    """Number of scalar parameters: bias-free convs plus per-channel scale/shift."""
    l, k = arch.hidden_layers, arch.width
    return l * k * k + k * arch.out_channels + 2 * k * l


@dataclass
class DecoderParams:
    """All trainable parameters: conv kernels plus batchnorm scales/shifts."""

    conv: list[np.ndarray]
    gamma: list[np.ndarray]
    beta: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        return [*self.conv, *self.gamma, *self.beta]

    def labels(self) -> list[str]:
        names = [f"conv{i}" for i in range(len(self.conv))]
        names += [f"gamma{i}" for i in range(len(self.gamma))]
        names += [f"beta{i}" for i in range(len(self.beta))]
        return names

    def zeros_like(self) -> "DecoderParams":
        return DecoderParams(
            conv=[np.zeros_like(a) for a in self.conv],
            gamma=[np.zeros_like(a) for a in self.gamma],
            beta=[np.zeros_like(a) for a in self.beta],
        )

    def scalar_count(self) -> int:
        return sum(a.size for a in self.arrays())


def init_params(arch: DecoderArch, gen: np.random.Generator) -> DecoderParams:
    """Fan-based uniform init for convs; identity scale / zero shift for norms."""
    conv = []
    for c_out, c_in in arch.conv_shapes():
        bound = math.sqrt(6.0 / (c_in + c_out))
        conv.append(gen.uniform(-bound, bound, size=(c_out, c_in)))
    gamma = [np.ones(arch.width) for _ in range(arch.hidden_layers)]
    beta = [np.zeros(arch.width) for _ in range(arch.hidden_layers)]
    return DecoderParams(conv=conv, gamma=gamma, beta=beta)


def draw_input(arch: DecoderArch, gen: np.random.Generator) -> np.ndarray:
    """The fixed uniform-noise input tensor fed to the network."""
    return Z0_LOW + (Z0_HIGH - Z0_LOW) * gen.random(
        (arch.width, arch.in_freq, arch.in_time)
    )


def _layer_plans(arch: DecoderArch):
    plans = []
    f, t = arch.in_freq, arch.in_time
    for _ in range(arch.hidden_layers - 1):
        plans.append((upsample_plan(f), upsample_plan(t)))
        f, t = 2 * f, 2 * t
    return plans


def decoder_forward(
    arch: DecoderArch,
    params: DecoderParams,
    z0: np.ndarray,
    bn_eps: float = DEFAULT_BN_EPS,
) -> np.ndarray:
    """Run the network; output shape (out_channels, out_freq, out_time)."""
    y, _ = _forward_cached(arch, params, z0, bn_eps, keep_cache=False)
    return y


def _forward_cached(arch, params, z0, bn_eps, keep_cache=True):
    if z0.shape != (arch.width, arch.in_freq, arch.in_time):
        raise ValueError(
            f"input shape {z0.shape} does not match arch "
            f"({arch.width}, {arch.in_freq}, {arch.in_time})"
        )
    plans = _layer_plans(arch)
    z = np.ascontiguousarray(z0, dtype=np.float64)
    cache = []
    for i in range(arch.hidden_layers):
        c = backend.conv_fwd(z, params.conv[i])
        if i < arch.hidden_layers - 1:
            u = backend.upsample_fwd(c, *plans[i])
        else:
            u = c
        r = backend.relu_fwd(u)
        y, xhat, inv_std = backend.bn_fwd(r, params.gamma[i], params.beta[i], bn_eps)
        if keep_cache:
            cache.append((z, u, xhat, inv_std))
        z = y
    out = backend.conv_fwd(z, params.conv[arch.hidden_layers])
    if keep_cache:
        cache.append(z)
    return out, cache


def decoder_backward(
    arch: DecoderArch,
    params: DecoderParams,
    z0: np.ndarray,
    target: np.ndarray,
    bn_eps: float = DEFAULT_BN_EPS,
) -> tuple[float, DecoderParams]:
    """Summed-squared-error loss against `target` and its exact gradients."""
    if target.shape != (arch.out_channels, arch.out_freq, arch.out_time):
        raise ValueError(f"target shape {target.shape} does not match arch output")
    out, cache = _forward_cached(arch, params, z0, bn_eps)
    diff = out - target
    loss = float(np.vdot(diff, diff).real)

    grads = params.zeros_like()
    plans = _layer_plans(arch)
    l = arch.hidden_layers

    g = 2.0 * diff
    g, grads.conv[l][...] = backend.conv_bwd(cache[l], params.conv[l], g)
    for i in range(l - 1, -1, -1):
        z, u, xhat, inv_std = cache[i]
        g, grads.gamma[i][...], grads.beta[i][...] = backend.bn_bwd(
            xhat, inv_std, params.gamma[i], g
        )
        g = backend.relu_bwd(u, g)
        if i < l - 1:
            g = backend.upsample_bwd(g, *plans[i])
        g, grads.conv[i][...] = backend.conv_bwd(z, params.conv[i], g)
    return loss, grads


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators plus hyperparameters."""

    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: DecoderParams | None = None
    v: DecoderParams | None = None


def adam_init(params: DecoderParams, lr: float = 0.01, **kw) -> AdamState:
    return AdamState(lr=lr, m=params.zeros_like(), v=params.zeros_like(), **kw)


def adam_step(
    state: AdamState, params: DecoderParams, grads: DecoderParams
) -> tuple[DecoderParams, AdamState]:
    """One bias-corrected Adam update; arrays are updated in place."""
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(
        params.arrays(), grads.arrays(), state.m.arrays(), state.v.arrays()
    ):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


@dataclass
class FitReport:
    """Outcome of fitting one grid: fitted output, loss trace, epoch count."""

    final_loss: float
    loss_trace: np.ndarray
    epochs: int
    output: np.ndarray
    params: DecoderParams = field(repr=False, default=None)


def fit(
    arch: DecoderArch,
    target: np.ndarray,
    epochs: int,
    lr: float,
    rng: RngStream,
    bn_eps: float = DEFAULT_BN_EPS,
) -> FitReport:
    """Fit the decoder to one target grid with `epochs` full-gradient steps.

    The input tensor is drawn once and held fixed; the budget itself is the
    stopping rule. Raises NonFiniteLoss on divergence.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    gen = rng.generator()
    z0 = draw_input(arch, gen)
    params = init_params(arch, gen)
    state = adam_init(params, lr=lr)
    trace = np.empty(epochs)
    for epoch in range(epochs):
        loss, grads = decoder_backward(arch, params, z0, target, bn_eps)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became non-finite at epoch {epoch}")
        trace[epoch] = loss
        params, state = adam_step(state, params, grads)
    output = decoder_forward(arch, params, z0, bn_eps)
    diff = output - target
    return FitReport(
        final_loss=float(np.vdot(diff, diff).real),
        loss_trace=trace,
        epochs=epochs,
        output=output,
        params=params,
    )
