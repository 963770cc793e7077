"""Channel estimators: LS, MMSE (genie and sample covariance), and the
decoder-denoised LS pipeline, plus closed-form error predictions.

The MMSE filter is never formed as the dense (m n_f x m n_f) inverse; the
Kronecker structure of the channel covariance turns it into two small
eigendecompositions and an elementwise shrinkage in the factor eigenbasis,
which is mathematically identical (see the brute-force equivalence test).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelModelSpec, full_covariance
from .decoder import DecoderArch, FitReport, fit
from .numerics import RngStream, hermitian_eig
from .signal_model import (
    PilotAllocation,
    ReceivedGrid,
    extract_from_array,
    pack_grid,
    unpack_grid,
)

GENIE = "genie"
SAMPLE = "sample"


@dataclass
class ChannelEstimate:
    h_hat: np.ndarray  # (m, n_f, n), constant along time
    estimator_id: str
    fit_seconds: float = 0.0
    report: FitReport | None = field(default=None, repr=False)


@dataclass(frozen=True)
class CovarianceModel:
    """Kronecker factors of the channel covariance used by the MMSE filter.

    copilot_power is the summed interferer-to-signal power ratio of co-pilot
    users sharing this covariance structure; it folds into the filter
    diagonal. Asynchronous (non-co-pilot) contamination is deliberately not
    modeled here: the MMSE baseline stays covariance-blind to it.
    """

    r_sp: np.ndarray
    r_f: np.ndarray
    source: str = GENIE
    copilot_power: float = 0.0


def genie_covariance(spec: ChannelModelSpec) -> CovarianceModel:
    r_sp, r_f = full_covariance(spec)
    return CovarianceModel(r_sp=r_sp, r_f=r_f, source=GENIE)


def _extend_time(h2: np.ndarray, n_time: int) -> np.ndarray:
    return np.repeat(h2[:, :, None], n_time, axis=2)


def ls_estimate(
    y_k: np.ndarray, rho: float, n_p: int, n_time: int, estimator_id: str = "ls"
) -> ChannelEstimate:
    """Divide the pilot observation by the known pilot gain."""
    h2 = y_k / (np.sqrt(rho) * n_p)
    return ChannelEstimate(h_hat=_extend_time(h2, n_time), estimator_id=estimator_id)


def mmse_estimate(
    y_k: np.ndarray,
    rho: float,
    n_p: int,
    cov: CovarianceModel,
    noise_var: float,
    n_time: int,
    estimator_id: str = "mmse",
) -> ChannelEstimate:
    """Linear MMSE filter applied in the covariance factor eigenbases.

    The observation model is y = sqrt(rho) n_p h + e with e white of variance
    n_p noise_var per entry, so the filter is
    sqrt(rho) n_p R (rho n_p^2 (1 + copilot) R + n_p noise_var I)^{-1}
    evaluated per eigenvalue pair of the factors.
    """
    w_sp, u_sp = hermitian_eig(cov.r_sp)
    w_f, u_f = hermitian_eig(cov.r_f)
    lam = np.clip(w_sp, 0.0, None)[:, None] * np.clip(w_f, 0.0, None)[None, :]
    num = np.sqrt(rho) * n_p * lam
    den = rho * n_p**2 * (1.0 + cov.copilot_power) * lam + n_p * noise_var
    d = np.divide(num, den, out=np.zeros_like(lam), where=den > 0)
    w = u_sp.conj().T @ y_k @ u_f.conj()
    h2 = u_sp @ (d * w) @ u_f.T
    return ChannelEstimate(h_hat=_extend_time(h2, n_time), estimator_id=estimator_id)


def sample_covariance(
    ls_estimates: np.ndarray, noise_var: float, rho: float, n_p: int
) -> CovarianceModel:
    """Per-factor sample covariance of LS estimates, noise-debiased and
    eigenvalue-clipped back to PSD.

    ls_estimates has shape (trials, m, n_f). The known LS noise contribution
    noise_var / (rho n_p) per entry is subtracted from each factor diagonal.
    """
    t, m, n_f = ls_estimates.shape
    if t < max(m, n_f):
        raise ValueError(f"need at least {max(m, n_f)} training estimates, got {t}")
    v = noise_var / (rho * n_p)
    r_sp = np.zeros((m, m), dtype=np.complex128)
    r_f = np.zeros((n_f, n_f), dtype=np.complex128)
    for h in ls_estimates:
        r_sp += h @ h.conj().T
        r_f += h.T @ h.conj()
    r_sp = r_sp / (t * n_f) - v * np.eye(m)
    r_f = r_f / (t * m) - v * np.eye(n_f)
    return CovarianceModel(
        r_sp=_clip_psd(r_sp), r_f=_clip_psd(r_f), source=SAMPLE
    )


def _clip_psd(a: np.ndarray) -> np.ndarray:
    a = 0.5 * (a + a.conj().T)
    w, u = hermitian_eig(a)
    w = np.clip(w, 0.0, None)
    out = (u * w) @ u.conj().T
    return 0.5 * (out + out.conj().T)


def dce_estimate(
    received: ReceivedGrid,
    arch: DecoderArch,
    epochs: int,
    lr: float,
    rng: RngStream,
    allocation: PilotAllocation | None = None,
    user: int = 0,
    estimator_id: str = "dce",
) -> ChannelEstimate:
    """LS on the decoder-denoised grid instead of the raw received signal.

    The decoder is fitted to the symbol-compensated grid (the received grid
    derotated by the served user's known unit-modulus symbols, which leaves
    noise and interference statistics untouched); the fitted output is then
    read out at the pilot resource elements exactly like LS.
    """
    alloc = allocation if allocation is not None else received.scene.allocation
    pilots = alloc.users[user]
    s = received.scene.symbol_grids[user]
    if np.any(np.abs(np.abs(s) - 1.0) > 1e-9):
        raise ValueError(
            "decoder fitting needs the served user's symbols on every resource "
            "element (single-served-user scenes)"
        )
    m = received.y.shape[0]
    if (arch.out_channels, arch.out_freq, arch.out_time) != (2 * m,) + s.shape:
        raise ValueError("decoder output dims do not match the received grid")

    derotated = received.y * s.conj()[None, :, :]
    t0 = time.perf_counter()
    report = fit(arch, pack_grid(derotated), epochs, lr, rng)
    elapsed = time.perf_counter() - t0
    denoised = unpack_grid(report.output)
    # after derotation the effective pilot symbols are all ones
    y_k = extract_from_array(denoised, pilots, symbols=np.ones_like(pilots.symbols))
    h2 = y_k / (np.sqrt(pilots.power) * alloc.n_p)
    return ChannelEstimate(
        h_hat=_extend_time(h2, alloc.n),
        estimator_id=estimator_id,
        fit_seconds=elapsed,
        report=report,
    )


def analytic_mmse_error(eigenvalues: np.ndarray, snr: float) -> float:
    """Total MMSE estimation error from the covariance eigenvalues."""
    if snr <= 0:
        raise ValueError("snr must be positive (linear)")
    lam = np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None)
    return float(np.sum(lam - lam**2 / (lam + 1.0 / snr)))


def analytic_ls_error(rank: int, snr: float) -> float:
    """Total LS estimation error: rank / snr."""
    if rank < 0:
        raise ValueError("rank must be non-negative")
    if snr <= 0:
        raise ValueError("snr must be positive (linear)")
    return rank / snr
