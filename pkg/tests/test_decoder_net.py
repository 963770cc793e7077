"""Network-level decoder tests: weight accounting, forward contracts,
gradient exactness, Adam behavior, and the fitting loop."""

import warnings

import numpy as np
import numpy.testing as npt
import pytest

from dce.decoder import (
    DecoderArch,
    NonFiniteLoss,
    adam_init,
    adam_step,
    decoder_backward,
    decoder_forward,
    draw_input,
    finite_difference_check,
    fit,
    init_params,
    weight_count,
)
from dce.numerics import RngStream

SMALL = DecoderArch(3, 4, 4, 8, 8)


class TestWeightCount:
    @pytest.mark.parametrize(
        "k,out_channels,expected",
        [
            (8, 2, 496), (16, 2, 1760), (32, 2, 6592), (64, 2, 25472),
            (8, 128, 1504), (16, 128, 3776), (32, 128, 10624), (64, 128, 33536),
        ],
    )
    def test_preset_rows(self, k, out_channels, expected):
        arch = DecoderArch(6, k, out_channels, 64, 64)
        assert weight_count(arch) == expected

    def test_matches_allocation(self):
        for arch in (SMALL, DecoderArch(4, 6, 10, 16, 24)):
            params = init_params(arch, RngStream(0).generator())
            assert params.scalar_count() == weight_count(arch)


class TestForward:
    def test_output_dims_flagship(self):
        arch = DecoderArch(6, 16, 128, 64, 64)
        assert (arch.width, arch.in_freq, arch.in_time) == (16, 2, 2)
        gen = RngStream(1).generator()
        out = decoder_forward(arch, init_params(arch, gen), draw_input(arch, gen))
        assert out.shape == (128, 64, 64)

    def test_output_dims_single_antenna(self):
        arch = DecoderArch(6, 8, 2, 64, 64)
        gen = RngStream(2).generator()
        out = decoder_forward(arch, init_params(arch, gen), draw_input(arch, gen))
        assert out.shape == (2, 64, 64)

    def test_zero_weights_zero_output(self):
        gen = RngStream(3).generator()
        params = init_params(SMALL, gen)
        for c in params.conv:
            c[...] = 0.0
        out = decoder_forward(SMALL, params, draw_input(SMALL, gen))
        npt.assert_array_equal(out, 0.0)

    def test_rejects_bad_input_shape(self):
        params = init_params(SMALL, RngStream(4).generator())
        with pytest.raises(ValueError):
            decoder_forward(SMALL, params, np.zeros((4, 3, 2)))

    def test_rejects_indivisible_grid(self):
        with pytest.raises(ValueError):
            DecoderArch(4, 4, 2, 12, 16)


class TestBackward:
    def test_zero_at_minimum(self):
        gen = RngStream(5).generator()
        params = init_params(SMALL, gen)
        z0 = draw_input(SMALL, gen)
        target = decoder_forward(SMALL, params, z0)
        loss, grads = decoder_backward(SMALL, params, z0, target)
        assert loss == 0.0
        for g in grads.arrays():
            npt.assert_array_equal(g, 0.0)

    def test_quadratic_scaling(self):
        gen = RngStream(6).generator()
        params = init_params(SMALL, gen)
        params.conv[-1][...] = 0.0  # zero output layer -> forward output is 0
        z0 = draw_input(SMALL, gen)
        target = gen.standard_normal((4, 8, 8))
        loss1, _ = decoder_backward(SMALL, params, z0, target)
        loss2, _ = decoder_backward(SMALL, params, z0, 2.0 * target)
        npt.assert_allclose(loss2, 4.0 * loss1, rtol=1e-12)

    def test_finite_differences(self):
        result = finite_difference_check(SMALL, RngStream(0))
        assert result.max_rel_err < 1e-5


class TestAdam:
    def test_first_step_is_signed_lr(self):
        params = _scalar_params(0.0)
        grads = _scalar_params(3.7)
        state = adam_init(params, lr=0.01)
        adam_step(state, params, grads)
        npt.assert_allclose(params.conv[0][0, 0], -0.01, atol=1e-6 * 0.01)

    def test_zero_gradient_keeps_params(self):
        params = _scalar_params(1.5)
        state = adam_init(params, lr=0.01)
        for _ in range(25):
            adam_step(state, params, _scalar_params(0.0))
        npt.assert_array_equal(params.conv[0], [[1.5]])

    def test_descends_quadratic(self):
        # ten steps on f(theta) = theta^2 starting from 1
        params = _scalar_params(1.0)
        state = adam_init(params, lr=0.01)
        for _ in range(10):
            grads = _scalar_params(2.0 * params.conv[0][0, 0])
            adam_step(state, params, grads)
        assert abs(params.conv[0][0, 0]) < 1.0


def _scalar_params(value):
    from dce.decoder import DecoderParams

    return DecoderParams(conv=[np.array([[float(value)]])], gamma=[], beta=[])


class TestFit:
    def test_trace_shape_and_finiteness(self):
        gen = RngStream(7).generator()
        target = gen.standard_normal((4, 8, 8))
        report = fit(SMALL, target, epochs=40, lr=0.01, rng=RngStream(8))
        assert report.epochs == 40
        assert report.loss_trace.shape == (40,)
        assert np.all(np.isfinite(report.loss_trace))
        assert report.final_loss >= 0.0
        assert report.output.shape == (4, 8, 8)

    def test_bit_deterministic(self):
        gen = RngStream(9).generator()
        target = gen.standard_normal((4, 8, 8))
        a = fit(SMALL, target, 30, 0.01, RngStream(10))
        b = fit(SMALL, target, 30, 0.01, RngStream(10))
        npt.assert_array_equal(a.output, b.output)
        npt.assert_array_equal(a.loss_trace, b.loss_trace)

    def test_self_representability(self):
        # a target in the network's own range is recovered to a few percent
        # of its energy within the tuned epoch budget (threshold frozen from
        # a pre-build measurement run: 1.4e-2 at this configuration)
        arch = DecoderArch(5, 16, 32, 32, 32)
        gen = RngStream(900).generator()
        target = decoder_forward(arch, init_params(arch, gen), draw_input(arch, gen))
        report = fit(arch, target, epochs=1970, lr=0.01, rng=RngStream(901))
        assert report.final_loss < 0.05 * float(np.sum(target**2))

    def test_divergence_raises(self):
        gen = RngStream(11).generator()
        target = gen.standard_normal((4, 8, 8))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(NonFiniteLoss):
                fit(SMALL, target, 60, lr=1e160, rng=RngStream(12))

    def test_rejects_zero_epochs(self):
        with pytest.raises(ValueError):
            fit(SMALL, np.zeros((4, 8, 8)), 0, 0.01, RngStream(0))


@pytest.mark.slow
def test_noise_impedance_full_size():
    """Fitting a pure-noise grid at the flagship architecture leaves most of
    the noise energy unexplained (measured ~0.98; frozen bound 0.3)."""
    arch = DecoderArch(6, 16, 128, 64, 64)
    noise = RngStream(903).generator().standard_normal((128, 64, 64))
    report = fit(arch, noise, epochs=1970, lr=0.01, rng=RngStream(904))
    ratio = float(np.sum((noise - report.output) ** 2) / np.sum(noise**2))
    assert ratio >= 0.3
