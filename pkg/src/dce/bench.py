"""Metrics and the Monte Carlo experiment runner.

A run is a grid of (estimator, SNR, trial) cells. Every trial derives its own
random substream from the base seed, so results are independent of scheduling
and the record list is bit-reproducible; trials may therefore run in a
process pool. Records come out in fixed (estimator, snr, trial) order.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelModelSpec, draw_channel
from .decoder import DecoderArch, NonFiniteLoss
from .estimators import (
    CovarianceModel,
    dce_estimate,
    genie_covariance,
    ls_estimate,
    mmse_estimate,
    sample_covariance,
)
from .numerics import RngStream
from .signal_model import (
    ContaminationSpec,
    CONTAM_NONE,
    ReceivedGrid,
    build_received_grid,
    extract_from_array,
    extract_user_signal,
    make_pilot_allocation,
)

MR = "mr"
ZF = "zf"
MMSE_COMBINER = "mmse"
COMBINERS = (MR, ZF, MMSE_COMBINER)

PREFACTOR_AS_DEFINED = "as_paper"
PREFACTOR_OVERHEAD = "one_minus_overhead"

# substream roles under a trial stream
_ROLE_ALLOC = 0
_ROLE_CHANNEL = 1
_ROLE_GRID = 2
_ROLE_FIT = 3
_COVTRAIN_TAG = 0xC0C0


class ZeroReference(Exception):
    """NMSE is undefined against an all-zero reference."""


def nmse(h: np.ndarray, h_hat: np.ndarray) -> float:
    """Squared estimation error normalized by the true channel energy."""
    if h.shape != h_hat.shape:
        raise ValueError("shape mismatch")
    ref = float(np.sum(np.abs(h) ** 2))
    if ref == 0.0:
        raise ZeroReference("reference channel has zero energy")
    return float(np.sum(np.abs(h - h_hat) ** 2)) / ref


def noise_suppression_ratio(n: np.ndarray, n_fit: np.ndarray) -> float:
    """Fraction of noise energy the fit failed to absorb: ||n - n_fit||^2/||n||^2."""
    if n.shape != n_fit.shape:
        raise ValueError("shape mismatch")
    ref = float(np.sum(np.abs(n) ** 2))
    if ref == 0.0:
        raise ZeroReference("noise tensor has zero energy")
    return float(np.sum(np.abs(n - n_fit) ** 2)) / ref


def _combiner_vectors(
    h_est_q: np.ndarray, combiner: str, rho: float, noise_var: float
) -> tuple[np.ndarray, bool]:
    """(m, k) combiner matrix from the estimated per-subcarrier channels."""
    if combiner == MR:
        return h_est_q, True
    if combiner == ZF:
        gram = h_est_q.conj().T @ h_est_q
        try:
            return h_est_q @ np.linalg.inv(gram), True
        except np.linalg.LinAlgError:
            return np.zeros_like(h_est_q), False
    if combiner == MMSE_COMBINER:
        m = h_est_q.shape[0]
        a = rho * (h_est_q @ h_est_q.conj().T) + noise_var * np.eye(m)
        return np.linalg.solve(a, h_est_q), True
    raise ValueError(f"unknown combiner {combiner!r}")


def sinr_and_se(
    h_true: np.ndarray,
    h_est: np.ndarray,
    combiner: str,
    rho: float,
    noise_var: float,
    n_p: int,
    n: int,
    prefactor: str = PREFACTOR_AS_DEFINED,
) -> np.ndarray:
    """Per-user spectral efficiency with the given receive combiner.

    h_true and h_est have shape (k_users, m, n_f); combining is done per
    subcarrier from the estimates and scored against the true channels. The
    pilot-overhead prefactor is n_p/n as defined, or (n - n_p)/n with the
    conventional switch.
    """
    k_users, m, n_f = h_true.shape
    if k_users > m:
        raise ValueError("need k_users <= m antennas")
    if prefactor == PREFACTOR_AS_DEFINED:
        pre = n_p / n
    elif prefactor == PREFACTOR_OVERHEAD:
        pre = (n - n_p) / n
    else:
        raise ValueError(f"unknown prefactor {prefactor!r}")
    se = np.zeros(k_users)
    for q in range(n_f):
        hq = h_true[:, :, q].T  # (m, k)
        vq, ok = _combiner_vectors(h_est[:, :, q].T, combiner, rho, noise_var)
        if not ok:
            continue  # singular ZF gram: zero contribution for this subcarrier
        cross = vq.conj().T @ hq  # (k, k): combiner row, user column
        sig = rho * np.abs(np.diag(cross)) ** 2
        total = rho * np.sum(np.abs(cross) ** 2, axis=1)
        interf = total - sig
        norms = noise_var * np.sum(np.abs(vq) ** 2, axis=0)
        sinr = sig / (interf + norms)
        se += pre * np.log2(1.0 + sinr)
    return se / n_f


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator entry of an experiment, with its decoder or covariance knobs."""

    id: str
    kind: str  # ls | mmse_genie | mmse_sample | dce
    width: int | None = None
    epochs: int | None = None
    lr: float = 0.01
    hidden_layers: int = 6
    training_trials: int = 500


@dataclass(frozen=True)
class SEConfig:
    enable: bool = False
    combiners: tuple[str, ...] = COMBINERS
    prefactor: str = PREFACTOR_AS_DEFINED


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelModelSpec
    k_users: int
    n_p: int
    arrangement: str
    snr_db: tuple[float, ...]
    estimators: tuple[EstimatorSpec, ...]
    trials: int
    seed: int
    contamination: ContaminationSpec | None = None
    tx_power: float = 1.0
    se: SEConfig = field(default_factory=SEConfig)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db:
            raise ValueError("snr_db list must be non-empty")
        if not self.estimators:
            raise ValueError("estimator list must be non-empty")
        if self.se.enable:
            for est in self.estimators:
                if est.kind == "dce":
                    raise ValueError(
                        "spectral-efficiency runs support ls/mmse estimators only"
                    )

    @property
    def sir_db(self) -> float | None:
        c = self.contamination
        if c is None or c.kind == CONTAM_NONE:
            return None
        return c.sir_db


@dataclass(frozen=True)
class ResultRecord:
    estimator: str
    snr_db: float
    sir_db: float | None
    trial: int
    metric: str
    value: float
    error: str | None = None


def record_ids(config: ExperimentConfig) -> list[str]:
    """Estimator ids as they appear in records (expanded per combiner in SE runs)."""
    if not config.se.enable:
        return [e.id for e in config.estimators]
    return [f"{e.id}+{c}" for e in config.estimators for c in config.se.combiners]


def noise_variance(config: ExperimentConfig, snr_db: float) -> float:
    return config.tx_power / 10.0 ** (snr_db / 10.0)


def build_scene(config: ExperimentConfig, snr_db: float, trial: int) -> ReceivedGrid:
    """Deterministically rebuild the received grid of one (snr, trial) cell."""
    trial_stream = RngStream(config.seed).child(trial)
    spec = config.channel
    alloc = make_pilot_allocation(
        config.k_users,
        config.n_p,
        config.arrangement,
        spec.n_f,
        spec.n,
        trial_stream.child(_ROLE_ALLOC),
        power=config.tx_power,
    )
    chans = [
        draw_channel(spec, trial_stream.child(_ROLE_CHANNEL).child(k))
        for k in range(config.k_users)
    ]
    return build_received_grid(
        chans,
        alloc,
        noise_variance(config, snr_db),
        trial_stream.child(_ROLE_GRID),
        contamination=config.contamination,
    )


def fit_stream(config: ExperimentConfig, trial: int, estimator_index: int) -> RngStream:
    """Substream feeding the decoder fit of one estimator in one trial."""
    return RngStream(config.seed).child(trial).child(_ROLE_FIT).child(estimator_index)


def training_covariance(
    config: ExperimentConfig, snr_db: float, snr_index: int, training_trials: int
) -> CovarianceModel:
    """Sample covariance from contamination-free training scenes at this SNR."""
    spec = config.channel
    parent = RngStream(config.seed).child(_COVTRAIN_TAG).child(snr_index)
    nv = noise_variance(config, snr_db)
    estimates = np.empty((training_trials, spec.m, spec.n_f), dtype=np.complex128)
    for t in range(training_trials):
        s = parent.child(t)
        alloc = make_pilot_allocation(
            1, config.n_p, config.arrangement, spec.n_f, spec.n, s.child(0),
            power=config.tx_power,
        )
        h = draw_channel(spec, s.child(1))
        grid = build_received_grid([h], alloc, nv, s.child(2))
        y_k = extract_from_array(grid.y, alloc.users[0])
        estimates[t] = y_k / (np.sqrt(config.tx_power) * config.n_p)
    return sample_covariance(estimates, nv, config.tx_power, config.n_p)


def _decoder_arch(config: ExperimentConfig, est: EstimatorSpec) -> DecoderArch:
    spec = config.channel
    return DecoderArch(est.hidden_layers, est.width, 2 * spec.m, spec.n_f, spec.n)


def _run_cell(
    config: ExperimentConfig,
    snr_db: float,
    trial: int,
    covariances: dict[str, CovarianceModel],
) -> list[tuple[str, str, float, str | None]]:
    """All metric values of one (snr, trial) cell: (estimator_id, metric, value, error)."""
    grid = build_scene(config, snr_db, trial)
    scene = grid.scene
    nv = grid.noise_var
    out: list[tuple[str, str, float, str | None]] = []

    if config.se.enable:
        h_true = np.stack([h[:, :, 0] for h in scene.channels])
        for est in config.estimators:
            h_est = np.empty_like(h_true)
            for k in range(config.k_users):
                y_k = extract_user_signal(grid, k)
                if est.kind == "ls":
                    h_est[k] = ls_estimate(y_k, config.tx_power, config.n_p, 1).h_hat[:, :, 0]
                else:
                    h_est[k] = mmse_estimate(
                        y_k, config.tx_power, config.n_p, covariances[est.id], nv, 1
                    ).h_hat[:, :, 0]
            for comb in config.se.combiners:
                se = sinr_and_se(
                    h_true, h_est, comb, config.tx_power, nv,
                    config.n_p, config.channel.n, config.se.prefactor,
                )
                out.append((f"{est.id}+{comb}", "se", float(np.sum(se)), None))
        return out

    h_true = scene.channels[0]
    for index, est in enumerate(config.estimators):
        try:
            if est.kind == "ls":
                y_k = extract_user_signal(grid, 0)
                ce = ls_estimate(y_k, config.tx_power, config.n_p, config.channel.n)
            elif est.kind in ("mmse_genie", "mmse_sample"):
                y_k = extract_user_signal(grid, 0)
                ce = mmse_estimate(
                    y_k, config.tx_power, config.n_p,
                    covariances[est.id], nv, config.channel.n,
                )
            elif est.kind == "dce":
                ce = dce_estimate(
                    grid,
                    _decoder_arch(config, est),
                    est.epochs,
                    est.lr,
                    fit_stream(config, trial, index),
                )
            else:
                raise ValueError(f"unknown estimator kind {est.kind!r}")
            out.append((est.id, "nmse", nmse(h_true, ce.h_hat), None))
        except NonFiniteLoss as exc:
            out.append((est.id, "nmse", float("nan"), str(exc)))
    return out


def prepare_covariances(
    config: ExperimentConfig, snr_db: float, snr_index: int
) -> dict[str, CovarianceModel]:
    covs: dict[str, CovarianceModel] = {}
    for est in config.estimators:
        if est.kind == "mmse_genie":
            covs[est.id] = genie_covariance(config.channel)
        elif est.kind == "mmse_sample":
            covs[est.id] = training_covariance(
                config, snr_db, snr_index, est.training_trials
            )
    return covs


def run_experiment(config: ExperimentConfig, threads: int = 1) -> list[ResultRecord]:
    """Run the full (snr x trial) grid and return records in fixed order."""
    cov_by_snr = {
        i: prepare_covariances(config, snr, i) for i, snr in enumerate(config.snr_db)
    }
    cells: dict[tuple[int, int], list] = {}
    tasks = [(i, t) for i in range(len(config.snr_db)) for t in range(config.trials)]
    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {
                pool.submit(
                    _run_cell, config, config.snr_db[i], t, cov_by_snr[i]
                ): (i, t)
                for i, t in tasks
            }
            for fut in concurrent.futures.as_completed(futures):
                cells[futures[fut]] = fut.result()
    else:
        for i, t in tasks:
            cells[(i, t)] = _run_cell(config, config.snr_db[i], t, cov_by_snr[i])

    by_key = {
        (est_id, i, t): (metric, value, err)
        for (i, t), results in cells.items()
        for est_id, metric, value, err in results
    }
    records = []
    for est_id in record_ids(config):
        for i, snr in enumerate(config.snr_db):
            for t in range(config.trials):
                metric, value, err = by_key[(est_id, i, t)]
                records.append(
                    ResultRecord(
                        estimator=est_id,
                        snr_db=float(snr),
                        sir_db=config.sir_db,
                        trial=t,
                        metric=metric,
                        value=value,
                        error=err,
                    )
                )
    return records


def summarize(records: list[ResultRecord]) -> list[dict]:
    """Per (estimator, snr, metric): mean, standard deviation, trial count."""
    groups: dict[tuple, list[float]] = {}
    order: list[tuple] = []
    for r in records:
        key = (r.estimator, r.snr_db, r.sir_db, r.metric)
        if key not in groups:
            groups[key] = []
            order.append(key)
        if r.error is None and np.isfinite(r.value):
            groups[key].append(r.value)
    out = []
    for key in order:
        vals = np.array(groups[key])
        est, snr, sir, metric = key
        out.append(
            {
                "estimator": est,
                "snr_db": snr,
                "sir_db": sir,
                "metric": metric,
                "mean": float(vals.mean()) if vals.size else float("nan"),
                "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
                "trials": int(vals.size),
            }
        )
    return out
