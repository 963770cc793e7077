"""Channel generator tests: moment oracles, covariance structure, and the
analytic frequency-covariance formula."""

import numpy as np
import numpy.testing as npt
import pytest

from dce.channels import (
    ChannelModelSpec,
    IID_PER_RE,
    KRONECKER,
    PowerDelayProfile,
    TDL,
    epa_profile,
    exp_corr_matrix,
    freq_covariance,
    full_covariance,
    iid_per_re_channel,
    kronecker_channel,
    tdl_channel,
)
from dce.numerics import RngStream, hermitian_eig


class TestPowerDelayProfile:
    def test_epa_normalized(self):
        pdp = epa_profile()
        npt.assert_allclose(pdp.powers.sum(), 1.0, atol=1e-12)
        assert pdp.delays[0] == 0.0 and pdp.delays[-1] == pytest.approx(410e-9)
        assert np.all(np.diff(pdp.delays) > 0)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            PowerDelayProfile(np.array([0.0, 1e-7]), np.array([0.6, 0.6]))

    def test_rejects_unsorted_delays(self):
        with pytest.raises(ValueError):
            PowerDelayProfile(np.array([1e-7, 0.0]), np.array([0.5, 0.5]))


def _single_tap_spec(m=2, n_f=8, n=4):
    pdp = PowerDelayProfile(np.array([0.0]), np.array([1.0]))
    return ChannelModelSpec(TDL, m, n_f, n, pdp=pdp)


class TestTdlChannel:
    def test_single_tap_is_flat(self):
        h = tdl_channel(_single_tap_spec(), RngStream(0))
        # flat fading: every subcarrier sees the same gain
        npt.assert_allclose(h, np.broadcast_to(h[:, :1, :], h.shape), atol=1e-12)

    def test_quasi_static(self):
        spec = ChannelModelSpec(TDL, 3, 16, 8)
        h = tdl_channel(spec, RngStream(1))
        npt.assert_array_equal(h, np.repeat(h[:, :, :1], 8, axis=2))

    def test_unit_power(self):
        # antennas are i.i.d. realizations of the same construction, so a
        # single wide draw serves as the Monte Carlo ensemble
        spec = ChannelModelSpec(TDL, 10_000, 4, 1)
        h = tdl_channel(spec, RngStream(2))
        npt.assert_allclose(np.mean(np.abs(h) ** 2), 1.0, rtol=0.03)

    def test_antennas_independent(self):
        spec = ChannelModelSpec(TDL, 2, 1, 1)
        samples = np.array(
            [tdl_channel(spec, RngStream(3, t))[:, 0, 0] for t in range(10_000)]
        )
        corr = np.mean(samples[:, 0] * samples[:, 1].conj())
        assert abs(corr) < 0.05

    def test_deterministic(self):
        spec = ChannelModelSpec(TDL, 2, 8, 2)
        npt.assert_array_equal(
            tdl_channel(spec, RngStream(4, 1)), tdl_channel(spec, RngStream(4, 1))
        )


class TestExpCorr:
    def test_values(self):
        r = exp_corr_matrix(0.5, 3)
        npt.assert_allclose(
            r.real, [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]], atol=1e-15
        )

    def test_rho_zero_identity(self):
        npt.assert_array_equal(exp_corr_matrix(0.0, 4), np.eye(4))

    def test_positive_definite_high_rho(self):
        w, _ = hermitian_eig(exp_corr_matrix(0.9, 64))
        assert w.min() > 0


class TestKroneckerChannel:
    def test_rho_zero_matches_tdl_moments(self):
        n_trials = 10_000
        spec_k = ChannelModelSpec(KRONECKER, 2, 4, 1, rho_corr=0.0)
        spec_t = ChannelModelSpec(TDL, 2, 4, 1)
        hk = np.array([kronecker_channel(spec_k, RngStream(5, t))[:, :, 0] for t in range(n_trials)])
        ht = np.array([tdl_channel(spec_t, RngStream(6, t))[:, :, 0] for t in range(n_trials)])
        npt.assert_allclose(np.abs(hk.mean(0)), 0.0, atol=0.05)
        npt.assert_allclose(
            np.mean(np.abs(hk) ** 2, axis=0), np.mean(np.abs(ht) ** 2, axis=0), atol=0.06
        )

    def test_spatial_covariance(self):
        m, rho = 4, 0.5
        spec = ChannelModelSpec(KRONECKER, m, 1, 1, rho_corr=rho)
        samples = np.array(
            [kronecker_channel(spec, RngStream(7, t))[:, 0, 0] for t in range(10_000)]
        )
        sample_cov = samples.T @ samples.conj() / samples.shape[0]
        npt.assert_allclose(sample_cov, exp_corr_matrix(rho, m), atol=0.05)

    def test_matrix_sqrt_identity(self):
        from dce.channels import _matrix_sqrt_hermitian

        r = exp_corr_matrix(0.7, 6)
        half = _matrix_sqrt_hermitian(r)
        npt.assert_allclose(half @ half.conj().T, r, atol=1e-10)


class TestIidChannel:
    def test_unit_power_and_independence(self):
        spec = ChannelModelSpec(IID_PER_RE, 200, 64, 2)
        h = iid_per_re_channel(spec, RngStream(8))
        npt.assert_allclose(np.mean(np.abs(h[:, :, 0]) ** 2), 1.0, rtol=0.03)
        flat = h[:, :, 0]
        corr = np.mean(flat[:, :-1] * flat[:, 1:].conj())
        assert abs(corr) < 0.05

    def test_deterministic_and_static(self):
        spec = ChannelModelSpec(IID_PER_RE, 2, 4, 3)
        a = iid_per_re_channel(spec, RngStream(9, 2))
        npt.assert_array_equal(a, iid_per_re_channel(spec, RngStream(9, 2)))
        npt.assert_array_equal(a[:, :, 0], a[:, :, 2])


class TestFreqCovariance:
    def test_single_tap_all_ones(self):
        pdp = PowerDelayProfile(np.array([0.0]), np.array([1.0]))
        npt.assert_allclose(freq_covariance(pdp, 5, 15e3), np.ones((5, 5)), atol=1e-15)

    def test_two_tap_formula(self):
        tau = 2e-6
        pdp = PowerDelayProfile(np.array([0.0, tau]), np.array([0.5, 0.5]))
        spacing = 15e3
        r = freq_covariance(pdp, 4, spacing)
        q = np.arange(4)
        expected = 0.5 * (1 + np.exp(-2j * np.pi * (q[:, None] - q[None, :]) * spacing * tau))
        npt.assert_allclose(r, expected, atol=1e-12)

    def test_matches_sample_covariance(self):
        # one wide draw: antennas of a TDL channel are i.i.d. realizations
        spec = ChannelModelSpec(TDL, 100_000, 4, 1)
        h = tdl_channel(spec, RngStream(10))[:, :, 0]
        sample = h.T @ h.conj() / h.shape[0]
        analytic = freq_covariance(spec.pdp, 4, spec.subcarrier_spacing)
        npt.assert_allclose(sample, analytic, atol=0.02)

    def test_psd_unit_diagonal(self):
        r = freq_covariance(epa_profile(), 64, 15e3)
        npt.assert_allclose(np.diag(r).real, 1.0, atol=1e-12)
        w, _ = hermitian_eig(r)
        assert w.min() >= -1e-10


class TestFullCovariance:
    def test_tdl_spatial_identity(self):
        r_sp, r_f = full_covariance(ChannelModelSpec(TDL, 5, 8, 1))
        npt.assert_array_equal(r_sp, np.eye(5))
        assert r_f.shape == (8, 8)

    def test_kronecker_factors(self):
        spec = ChannelModelSpec(KRONECKER, 3, 8, 1, rho_corr=0.5)
        r_sp, _ = full_covariance(spec)
        npt.assert_allclose(r_sp, exp_corr_matrix(0.5, 3))

    def test_iid_identity_factors(self):
        r_sp, r_f = full_covariance(ChannelModelSpec(IID_PER_RE, 3, 4, 1))
        npt.assert_array_equal(r_sp, np.eye(3))
        npt.assert_array_equal(r_f, np.eye(4))

    def test_vec_consistency(self):
        # sample covariance of vec(H) approaches kron(R_f, R_sp)
        m, n_f, trials = 2, 4, 100_000
        spec = ChannelModelSpec(KRONECKER, m, n_f, 1, rho_corr=0.5)
        vecs = np.empty((trials, m * n_f), dtype=np.complex128)
        for t in range(trials):
            vecs[t] = kronecker_channel(spec, RngStream(11, t))[:, :, 0].reshape(-1, order="F")
        sample = vecs.T @ vecs.conj() / trials
        r_sp, r_f = full_covariance(spec)
        npt.assert_allclose(sample, np.kron(r_f, r_sp), atol=0.03)
