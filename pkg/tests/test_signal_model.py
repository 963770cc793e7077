"""Signal-model tests: pilot allocation invariants, grid construction
energetics, contamination masks, extraction, and grid packing."""

import numpy as np
import numpy.testing as npt
import pytest

from dce.channels import ChannelModelSpec, TDL, draw_channel
from dce.numerics import RngStream
from dce.signal_model import (
    BLOCK_SYMBOL,
    CONTAM_BLOCKS,
    CONTAM_RANDOM,
    ContaminationSpec,
    InsufficientResources,
    RANDOM_TONES,
    build_received_grid,
    contamination_mask,
    extract_user_signal,
    make_pilot_allocation,
    pack_grid,
    unpack_grid,
)


class TestPilotAllocation:
    def test_single_user_block_fills_first_symbol(self):
        alloc = make_pilot_allocation(1, 1, BLOCK_SYMBOL, 64, 64, RngStream(0))
        npt.assert_array_equal(alloc.users[0].time_idx, np.zeros((64, 1)))
        npt.assert_allclose(np.abs(alloc.users[0].symbols), 1.0, atol=1e-12)

    @pytest.mark.parametrize("arrangement", [BLOCK_SYMBOL, RANDOM_TONES])
    def test_users_disjoint(self, arrangement):
        alloc = make_pilot_allocation(3, 2, arrangement, 16, 32, RngStream(1))
        for q in range(16):
            slots = np.concatenate([u.time_idx[q] for u in alloc.users])
            assert len(np.unique(slots)) == len(slots)

    def test_every_subcarrier_covered(self):
        alloc = make_pilot_allocation(2, 2, RANDOM_TONES, 8, 16, RngStream(2))
        for user in alloc.users:
            assert user.time_idx.shape == (8, 2)
            assert np.all((user.time_idx >= 0) & (user.time_idx < 16))

    def test_reproducible(self):
        a = make_pilot_allocation(2, 1, RANDOM_TONES, 8, 16, RngStream(3, 4))
        b = make_pilot_allocation(2, 1, RANDOM_TONES, 8, 16, RngStream(3, 4))
        npt.assert_array_equal(a.users[0].time_idx, b.users[0].time_idx)
        npt.assert_array_equal(a.users[1].symbols, b.users[1].symbols)

    def test_insufficient_resources(self):
        with pytest.raises(InsufficientResources):
            make_pilot_allocation(5, 2, BLOCK_SYMBOL, 8, 8, RngStream(4))


def _scene(m=2, n_f=8, n=8, noise_var=0.0, k_users=1, n_p=1, seed=0,
           contamination=None, arrangement=BLOCK_SYMBOL):
    spec = ChannelModelSpec(TDL, m, n_f, n)
    base = RngStream(seed)
    chans = [draw_channel(spec, base.child(10 + k)) for k in range(k_users)]
    alloc = make_pilot_allocation(k_users, n_p, arrangement, n_f, n, base.child(1))
    grid = build_received_grid(chans, alloc, noise_var, base.child(2),
                               contamination=contamination)
    return chans, alloc, grid


class TestBuildReceivedGrid:
    def test_noiseless_pilots_carry_channel(self):
        chans, alloc, grid = _scene()
        user = alloc.users[0]
        q = np.arange(8)[:, None]
        expected = chans[0][:, q, user.time_idx] * user.symbols[None]
        npt.assert_allclose(grid.y[:, q, user.time_idx], expected, atol=1e-12)

    def test_sir_power_ratio(self):
        spec = ChannelModelSpec(TDL, 2, 8, 8)
        contam = ContaminationSpec(kind=CONTAM_RANDOM, fraction=0.25, sir_db=6.0,
                                   channel=spec)
        _, _, grid = _scene(noise_var=0.0, contamination=contam, seed=5)
        npt.assert_allclose(grid.scene.interferer_power, 10 ** (-0.6), rtol=1e-12)
        assert grid.scene.interferer_power == pytest.approx(0.2512, abs=5e-4)

    def test_energy_bookkeeping(self):
        # E||Y||^2 = rho E||H s||^2 + interference power + noise power, 2%
        m, n_f, n, trials = 2, 8, 8, 1000
        noise_var = 0.5
        total = 0.0
        expected_sig = 0.0
        for t in range(trials):
            chans, alloc, grid = _scene(m=m, noise_var=noise_var, seed=1000 + t)
            total += np.sum(np.abs(grid.y) ** 2)
            expected_sig += np.sum(
                np.abs(chans[0] * grid.scene.symbol_grids[0][None]) ** 2
            )
        expected = expected_sig + trials * noise_var * m * n_f * n
        npt.assert_allclose(total, expected, rtol=0.02)

    def test_empirical_snr(self):
        # measured signal-to-noise power ratio matches rho/noise_var
        m, n_f, n, trials = 2, 8, 8, 1000
        noise_var = 0.25
        sig, noi = 0.0, 0.0
        for t in range(trials):
            base = RngStream(7000 + t)
            spec = ChannelModelSpec(TDL, m, n_f, n)
            h = draw_channel(spec, base.child(10))
            alloc = make_pilot_allocation(1, 1, BLOCK_SYMBOL, n_f, n, base.child(1))
            noisy = build_received_grid([h], alloc, noise_var, base.child(2))
            clean = build_received_grid([h], alloc, 0.0, base.child(2))
            sig += np.sum(np.abs(clean.y) ** 2)
            noi += np.sum(np.abs(noisy.y - clean.y) ** 2)
        npt.assert_allclose(sig / noi, 1.0 / noise_var, rtol=0.02)

    def test_mask_applies_to_all_antennas(self):
        spec = ChannelModelSpec(TDL, 3, 8, 8)
        contam = ContaminationSpec(kind=CONTAM_RANDOM, fraction=0.2, sir_db=0.0,
                                   channel=spec)
        chans, alloc, grid = _scene(m=3, noise_var=0.0, contamination=contam, seed=8)
        clean = chans[0] * grid.scene.symbol_grids[0][None]
        diff = np.abs(grid.y - clean) > 1e-14
        mask = grid.scene.mask
        for ant in range(3):
            npt.assert_array_equal(diff[ant], mask)


class TestContaminationMask:
    def test_fraction_count(self):
        spec = ContaminationSpec(kind=CONTAM_RANDOM, fraction=0.05, sir_db=6.0)
        mask = contamination_mask(spec, 64, 64, RngStream(9))
        assert mask.sum() == 204  # floor(0.05 * 4096)

    def test_two_blocks_exact_area(self):
        spec = ContaminationSpec(kind=CONTAM_BLOCKS, n_blocks=2, sir_db=10.0)
        mask = contamination_mask(spec, 64, 64, RngStream(10))
        assert mask.sum() == 128  # two disjoint 8x8 squares, ~3.1% of the grid

    def test_zero_fraction_empty(self):
        spec = ContaminationSpec(kind=CONTAM_RANDOM, fraction=0.0, sir_db=6.0)
        assert contamination_mask(spec, 64, 64, RngStream(11)).sum() == 0


class TestExtraction:
    def test_noiseless_single_user_exact(self):
        for n_p in (1, 2):
            chans, alloc, grid = _scene(n_p=n_p, seed=12)
            y_k = extract_user_signal(grid, 0)
            npt.assert_allclose(y_k, n_p * chans[0][:, :, 0], atol=1e-12)

    def test_two_users_zero_cross_terms(self):
        chans, alloc, grid = _scene(k_users=2, seed=13)
        for k in range(2):
            y_k = extract_user_signal(grid, k)
            npt.assert_array_equal(y_k, chans[k][:, :, 0])  # bit-exact orthogonality

    def test_noise_only_variance(self):
        # noise-only grids: extraction output variance is n_p * sigma^2
        m, n_f, n, n_p, noise_var = 8, 64, 8, 2, 0.7
        samples = []
        for t in range(20):
            base = RngStream(14, t)
            alloc = make_pilot_allocation(1, n_p, BLOCK_SYMBOL, n_f, n, base.child(1))
            zero = [np.zeros((m, n_f, n), dtype=np.complex128)]
            grid = build_received_grid(zero, alloc, noise_var, base.child(2))
            samples.append(extract_user_signal(grid, 0).ravel())
        var = np.mean(np.abs(np.concatenate(samples)) ** 2)
        npt.assert_allclose(var, n_p * noise_var, rtol=0.03)

    def test_unknown_user_raises(self):
        _, _, grid = _scene(seed=15)
        with pytest.raises(ValueError):
            extract_user_signal(grid, 3)


class TestPacking:
    def test_round_trip(self):
        gen = RngStream(16).generator()
        y = gen.standard_normal((3, 4, 5)) + 1j * gen.standard_normal((3, 4, 5))
        npt.assert_array_equal(unpack_grid(pack_grid(y)), y)

    def test_real_grid_zero_imag_half(self):
        y = RngStream(17).generator().standard_normal((2, 3, 3)) + 0j
        packed = pack_grid(y)
        npt.assert_array_equal(packed[2:], 0.0)

    def test_layout(self):
        y = np.full((1, 2, 2), 3.0 + 4.0j)
        packed = pack_grid(y)
        npt.assert_array_equal(packed[0], 3.0)
        npt.assert_array_equal(packed[1], 4.0)

    def test_odd_channels_rejected(self):
        with pytest.raises(ValueError):
            unpack_grid(np.zeros((3, 2, 2)))
