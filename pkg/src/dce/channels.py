"""Synthetic channel generators and their analytic covariance factors.

Three families are provided: a tapped-delay-line model with a standard
pedestrian power-delay profile (frequency-correlated, spatially white), a
Kronecker model adding exponential spatial correlation at the array, and an
i.i.d.-per-resource-element control with no structure to exploit. All are
quasi-static: one draw per coherence interval, constant across OFDM symbols,
with unit average power per entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .numerics import RngStream, hermitian_eig

TDL = "tdl"
KRONECKER = "kronecker"
IID_PER_RE = "iid_per_re"

DEFAULT_SUBCARRIER_SPACING_HZ = 15e3

# 3GPP Extended Pedestrian A profile: (delay ns, power dB)
_EPA_TAPS = (
    (0.0, 0.0),
    (30.0, -1.0),
    (70.0, -2.0),
    (90.0, -3.0),
    (110.0, -8.0),
    (190.0, -17.2),
    (410.0, -20.8),
)


@dataclass(frozen=True)
class PowerDelayProfile:
    """Multipath tap delays (seconds) and linear powers summing to one."""

    delays: np.ndarray
    powers: np.ndarray

    def __post_init__(self) -> None:
        delays = np.asarray(self.delays, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        if delays.ndim != 1 or delays.shape != powers.shape:
            raise ValueError("delays and powers must be matching 1-D arrays")
        if np.any(delays < 0) or np.any(np.diff(delays) <= 0):
            raise ValueError("delays must be non-negative and strictly increasing")
        if np.any(powers <= 0):
            raise ValueError("tap powers must be positive")
        if abs(powers.sum() - 1.0) > 1e-12:
            raise ValueError("tap powers must sum to 1")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "powers", powers)

    @staticmethod
    def from_db(delays_s, powers_db) -> "PowerDelayProfile":
        p = 10.0 ** (np.asarray(powers_db, dtype=float) / 10.0)
        return PowerDelayProfile(np.asarray(delays_s, dtype=float), p / p.sum())


def epa_profile() -> PowerDelayProfile:
    """Pedestrian-A profile normalized to unit total power."""
    delays = np.array([t[0] for t in _EPA_TAPS]) * 1e-9
    powers_db = np.array([t[1] for t in _EPA_TAPS])
    return PowerDelayProfile.from_db(delays, powers_db)


@dataclass(frozen=True)
class ChannelModelSpec:
    """Which channel family to draw, and its dimensions."""

    kind: str
    m: int
    n_f: int
    n: int
    pdp: PowerDelayProfile = field(default_factory=epa_profile)
    rho_corr: float = 0.0
    subcarrier_spacing: float = DEFAULT_SUBCARRIER_SPACING_HZ

    def __post_init__(self) -> None:
        if self.kind not in (TDL, KRONECKER, IID_PER_RE):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if not 0.0 <= self.rho_corr < 1.0:
            raise ValueError("rho_corr must be in [0, 1)")
        if min(self.m, self.n_f, self.n) < 1:
            raise ValueError("dimensions must be >= 1")


def _tap_phases(pdp: PowerDelayProfile, n_f: int, spacing: float) -> np.ndarray:
    """exp(-j 2 pi f_q tau_p), shape (taps, subcarriers)."""
    freqs = spacing * np.arange(n_f)
    return np.exp(-2j * np.pi * np.outer(pdp.delays, freqs))


def _extend_time(h2: np.ndarray, n: int) -> np.ndarray:
    return np.repeat(h2[:, :, None], n, axis=2)


def _draw_taps(pdp: PowerDelayProfile, m: int, gen: np.random.Generator) -> np.ndarray:
    parts = gen.standard_normal((2, m, pdp.powers.size))
    return np.sqrt(pdp.powers / 2.0) * (parts[0] + 1j * parts[1])


def tdl_channel(spec: ChannelModelSpec, rng: RngStream) -> np.ndarray:
    """Frequency response of independently faded taps, one draw per antenna."""
    if spec.kind != TDL:
        raise ValueError("spec.kind must be 'tdl'")
    gen = rng.generator()
    taps = _draw_taps(spec.pdp, spec.m, gen)
    h2 = taps @ _tap_phases(spec.pdp, spec.n_f, spec.subcarrier_spacing)
    return _extend_time(h2, spec.n)


def exp_corr_matrix(rho_corr: float, m: int) -> np.ndarray:
    """Exponential spatial correlation: R[i, j] = rho^|i-j| (complex dtype)."""
    if not 0.0 <= rho_corr < 1.0:
        raise ValueError("rho_corr must be in [0, 1)")
    idx = np.arange(m)
    return (rho_corr ** np.abs(idx[:, None] - idx[None, :])).astype(np.complex128)


def _matrix_sqrt_hermitian(a: np.ndarray) -> np.ndarray:
    w, u = hermitian_eig(a)
    return (u * np.sqrt(np.clip(w, 0.0, None))) @ u.conj().T


def kronecker_channel(spec: ChannelModelSpec, rng: RngStream) -> np.ndarray:
    """Spatially correlated variant: the white per-antenna tap gains are mixed
    by the square root of the exponential correlation matrix before the
    delay-line frequency response is formed."""
    if spec.kind != KRONECKER:
        raise ValueError("spec.kind must be 'kronecker'")
    gen = rng.generator()
    taps = _draw_taps(spec.pdp, spec.m, gen)
    r_half = _matrix_sqrt_hermitian(exp_corr_matrix(spec.rho_corr, spec.m))
    h2 = (r_half @ taps) @ _tap_phases(spec.pdp, spec.n_f, spec.subcarrier_spacing)
    return _extend_time(h2, spec.n)


def iid_per_re_channel(spec: ChannelModelSpec, rng: RngStream) -> np.ndarray:
    """Every (antenna, subcarrier) gain i.i.d. CN(0, 1); no correlation at all."""
    if spec.kind != IID_PER_RE:
        raise ValueError("spec.kind must be 'iid_per_re'")
    gen = rng.generator()
    parts = gen.standard_normal((2, spec.m, spec.n_f))
    h2 = (parts[0] + 1j * parts[1]) / np.sqrt(2.0)
    return _extend_time(h2, spec.n)


def draw_channel(spec: ChannelModelSpec, rng: RngStream) -> np.ndarray:
    if spec.kind == TDL:
        return tdl_channel(spec, rng)
    if spec.kind == KRONECKER:
        return kronecker_channel(spec, rng)
    return iid_per_re_channel(spec, rng)


def freq_covariance(pdp: PowerDelayProfile, n_f: int, spacing: float) -> np.ndarray:
    """Covariance across subcarriers implied by the power-delay profile.

    R_f[q, q'] = sum_p P_p exp(-j 2 pi (q - q') spacing tau_p); Hermitian
    Toeplitz, PSD, unit diagonal.
    """
    d = spacing * np.arange(n_f)
    first_col = np.exp(-2j * np.pi * np.outer(d, pdp.delays)) @ pdp.powers
    return scipy.linalg.toeplitz(first_col, first_col.conj())


def full_covariance(spec: ChannelModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Kronecker factors (R_sp, R_f) of the vectorized-channel covariance.

    vec stacks the per-subcarrier antenna columns, so the covariance of
    vec(H) is kron(R_f, R_sp). The i.i.d. model returns identity factors.
    """
    eye_sp = np.eye(spec.m, dtype=np.complex128)
    if spec.kind == IID_PER_RE:
        return eye_sp, np.eye(spec.n_f, dtype=np.complex128)
    r_f = freq_covariance(spec.pdp, spec.n_f, spec.subcarrier_spacing)
    if spec.kind == KRONECKER:
        return exp_corr_matrix(spec.rho_corr, spec.m), r_f
    return eye_sp, r_f
