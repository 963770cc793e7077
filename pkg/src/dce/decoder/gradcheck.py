"""Central finite-difference validation of the hand-derived gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import RngStream
from .net import DecoderArch, decoder_backward, draw_input, init_params
from .ops import DEFAULT_BN_EPS


@dataclass
class GradCheckResult:
    max_rel_err: float
    worst_label: str
    worst_index: tuple
    analytic: float
    numeric: float


def finite_difference_check(
    arch: DecoderArch,
    rng: RngStream,
    h: float = 1e-5,
    bn_eps: float = DEFAULT_BN_EPS,
) -> GradCheckResult:
    """Compare analytic gradients with central differences for every parameter.

    Relative error uses a floor of 1e-3 times the RMS gradient, so coordinates
    whose gradient happens to cancel to near zero are judged against the
    overall gradient scale instead of amplified rounding noise.
    """
    gen = rng.generator()
    z0 = draw_input(arch, gen)
    params = init_params(arch, gen)
    target = gen.standard_normal((arch.out_channels, arch.out_freq, arch.out_time))

    _, grads = decoder_backward(arch, params, z0, target, bn_eps)
    g_arrays = grads.arrays()
    rms = np.sqrt(
        sum(float(np.sum(g * g)) for g in g_arrays)
        / sum(g.size for g in g_arrays)
    )
    floor = 1e-3 * max(rms, 1e-12)

    worst = GradCheckResult(0.0, "", (), 0.0, 0.0)
    for label, array, g in zip(params.labels(), params.arrays(), g_arrays):
        it = np.nditer(array, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = array[idx]
            array[idx] = orig + h
            lo_plus, _ = decoder_backward(arch, params, z0, target, bn_eps)
            array[idx] = orig - h
            lo_minus, _ = decoder_backward(arch, params, z0, target, bn_eps)
            array[idx] = orig
            numeric = (lo_plus - lo_minus) / (2.0 * h)
            analytic = g[idx]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
            if rel > worst.max_rel_err:
                worst = GradCheckResult(rel, label, idx, float(analytic), numeric)
            it.iternext()
    return worst
