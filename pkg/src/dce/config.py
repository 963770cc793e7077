"""JSON experiment configuration: parsing, validation, and round-tripping.

A config document has the fixed top-level keys channel / grid / noise /
contamination / estimators / run / se (see README for the full schema).
Validation errors always name the offending key. ``config_to_dict`` emits the
fully resolved document written into run manifests; feeding that document
back through ``resolve_config`` reproduces the experiment bit-exactly.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from .bench import (
    COMBINERS,
    EstimatorSpec,
    ExperimentConfig,
    PREFACTOR_AS_DEFINED,
    PREFACTOR_OVERHEAD,
    SEConfig,
)
from .channels import (
    ChannelModelSpec,
    DEFAULT_SUBCARRIER_SPACING_HZ,
    IID_PER_RE,
    KRONECKER,
    PowerDelayProfile,
    TDL,
    epa_profile,
)
from .signal_model import (
    BLOCK_SYMBOL,
    CONTAM_BLOCKS,
    CONTAM_NONE,
    CONTAM_RANDOM,
    ContaminationSpec,
    RANDOM_TONES,
)

# epochs tuned per decoder width, keyed by output channel count
DECODER_EPOCHS = {
    2: {8: 2000, 16: 1300, 32: 900, 64: 250},
    128: {8: 4000, 16: 1970, 32: 1800, 64: 1000},
}

ESTIMATOR_KINDS = ("mmse_sample", "mmse_genie", "dce", "ls")


class ConfigError(Exception):
    """Invalid or missing configuration key; the message names it."""


def _require(d: dict, key: str, path: str) -> Any:
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing config key: {path}.{key}" if path else f"missing config key: {key}")
    return d[key]


def _get(d: dict, key: str, default: Any) -> Any:
    if not isinstance(d, dict):
        return default
    return d.get(key, default)


def _expect(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"invalid value for {key}: {message}")


def _parse_pdp(raw: dict | None) -> PowerDelayProfile:
    if raw is None:
        return epa_profile()
    if "delays_s" in raw and "powers" in raw:
        p = np.asarray(raw["powers"], dtype=float)
        return PowerDelayProfile(np.asarray(raw["delays_s"], dtype=float), p / p.sum())
    if "delays_ns" in raw and "powers_db" in raw:
        delays = np.asarray(raw["delays_ns"], dtype=float) * 1e-9
        return PowerDelayProfile.from_db(delays, raw["powers_db"])
    raise ConfigError(
        "invalid value for channel.pdp: need delays_ns/powers_db or delays_s/powers"
    )


def _estimator_kind(est_id: str) -> str:
    for kind in ESTIMATOR_KINDS:
        if est_id == kind or est_id.startswith(kind + "_") or est_id.startswith(kind + "-"):
            return kind
    raise ConfigError(
        f"invalid value for estimators[].id: {est_id!r} must start with one of {ESTIMATOR_KINDS}"
    )


def _parse_estimator(raw: dict, index: int, out_channels: int) -> EstimatorSpec:
    path = f"estimators[{index}]"
    est_id = _require(raw, "id", path)
    kind = _estimator_kind(str(est_id))
    params = _get(raw, "params", {}) or {}
    if kind == "dce":
        preset = raw.get("preset")
        if preset is not None:
            _expect(
                isinstance(preset, str) and preset.startswith("k") and preset[1:].isdigit(),
                f"{path}.preset",
                "expected 'k<width>' such as 'k16'",
            )
            width = int(preset[1:])
            table = DECODER_EPOCHS.get(out_channels, {})
            if width not in table:
                raise ConfigError(
                    f"invalid value for {path}.preset: no tuned epoch count for "
                    f"width {width} at {out_channels} output channels; give explicit params"
                )
            epochs = table[width]
        else:
            width = _require(params, "width", f"{path}.params")
            epochs = _require(params, "epochs", f"{path}.params")
        lr = float(_get(params, "lr", 0.01))
        return EstimatorSpec(
            id=str(est_id),
            kind=kind,
            width=int(width),
            epochs=int(epochs),
            lr=lr,
            hidden_layers=int(_get(params, "hidden_layers", 6)),
        )
    if kind == "mmse_sample":
        return EstimatorSpec(
            id=str(est_id), kind=kind,
            training_trials=int(_get(params, "training_trials", 500)),
        )
    return EstimatorSpec(id=str(est_id), kind=kind)


def resolve_config(raw: dict) -> ExperimentConfig:
    """Parse and validate a raw config document into an ExperimentConfig."""
    channel = _require(raw, "channel", "")
    grid = _require(raw, "grid", "")
    noise = _require(raw, "noise", "")
    kind = str(_require(channel, "kind", "channel"))
    _expect(kind in (TDL, KRONECKER, IID_PER_RE), "channel.kind", f"unknown kind {kind!r}")
    m = int(_require(grid, "m", "grid"))
    n_f = int(_require(grid, "n_f", "grid"))
    n = int(_require(grid, "n", "grid"))
    try:
        spec = ChannelModelSpec(
            kind=kind,
            m=m,
            n_f=n_f,
            n=n,
            pdp=_parse_pdp(_get(channel, "pdp", None)),
            rho_corr=float(_get(channel, "rho", 0.0)),
            subcarrier_spacing=float(
                _get(channel, "subcarrier_spacing_hz", DEFAULT_SUBCARRIER_SPACING_HZ)
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid value for channel: {exc}") from exc

    snr_db = _require(noise, "snr_db", "noise")
    _expect(isinstance(snr_db, (list, tuple)) and len(snr_db) > 0, "noise.snr_db", "non-empty list required")

    arrangement = str(_get(grid, "arrangement", BLOCK_SYMBOL))
    _expect(
        arrangement in (BLOCK_SYMBOL, RANDOM_TONES),
        "grid.arrangement",
        f"unknown arrangement {arrangement!r}",
    )

    contamination = None
    c_raw = _get(raw, "contamination", None)
    if c_raw is not None:
        c_kind = str(_get(c_raw, "kind", CONTAM_NONE))
        _expect(
            c_kind in (CONTAM_NONE, CONTAM_RANDOM, CONTAM_BLOCKS),
            "contamination.kind",
            f"unknown kind {c_kind!r}",
        )
        if c_kind != CONTAM_NONE:
            contamination = ContaminationSpec(
                kind=c_kind,
                fraction=float(_get(c_raw, "fraction", 0.0)),
                n_blocks=int(_get(c_raw, "blocks", 2)),
                sir_db=float(_require(c_raw, "sir_db", "contamination")),
                channel=spec,
            )

    raw_ests = _require(raw, "estimators", "")
    _expect(isinstance(raw_ests, list) and len(raw_ests) > 0, "estimators", "non-empty list required")
    estimators = tuple(
        _parse_estimator(e, i, 2 * m) for i, e in enumerate(raw_ests)
    )

    run = _get(raw, "run", {})
    se_raw = _get(raw, "se", {})
    combiners = tuple(str(c) for c in _get(se_raw, "combiners", list(COMBINERS)))
    for c in combiners:
        _expect(c in COMBINERS, "se.combiners", f"unknown combiner {c!r}")
    prefactor = str(_get(se_raw, "prefactor", PREFACTOR_AS_DEFINED))
    _expect(
        prefactor in (PREFACTOR_AS_DEFINED, PREFACTOR_OVERHEAD),
        "se.prefactor",
        f"unknown prefactor {prefactor!r}",
    )
    se = SEConfig(
        enable=bool(_get(se_raw, "enable", False)),
        combiners=combiners,
        prefactor=prefactor,
    )

    try:
        return ExperimentConfig(
            channel=spec,
            k_users=int(_get(grid, "k_users", 1)),
            n_p=int(_get(grid, "n_p", 1)),
            arrangement=arrangement,
            snr_db=tuple(float(s) for s in snr_db),
            estimators=estimators,
            trials=int(_get(run, "trials", 1)),
            seed=int(_get(run, "seed", 0)),
            contamination=contamination,
            tx_power=float(_get(raw, "tx_power", 1.0)),
            se=se,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid value for config: {exc}") from exc


def run_threads(raw: dict) -> int:
    return int(_get(_get(raw, "run", {}), "threads", 1))


def config_to_dict(config: ExperimentConfig, threads: int = 1) -> dict:
    """Fully resolved, JSON-serializable document that replays this config."""
    spec = config.channel
    doc: dict[str, Any] = {
        "channel": {
            "kind": spec.kind,
            "rho": spec.rho_corr,
            "subcarrier_spacing_hz": spec.subcarrier_spacing,
            "pdp": {
                "delays_s": [float(d) for d in spec.pdp.delays],
                "powers": [float(p) for p in spec.pdp.powers],
            },
        },
        "grid": {
            "m": spec.m,
            "n_f": spec.n_f,
            "n": spec.n,
            "k_users": config.k_users,
            "n_p": config.n_p,
            "arrangement": config.arrangement,
        },
        "noise": {"snr_db": list(config.snr_db)},
        "estimators": [],
        "run": {"trials": config.trials, "seed": config.seed, "threads": threads},
        "se": {
            "enable": config.se.enable,
            "combiners": list(config.se.combiners),
            "prefactor": config.se.prefactor,
        },
        "tx_power": config.tx_power,
    }
    if config.contamination is not None:
        c = config.contamination
        doc["contamination"] = {
            "kind": c.kind,
            "fraction": c.fraction,
            "blocks": c.n_blocks,
            "sir_db": c.sir_db,
        }
    for est in config.estimators:
        entry: dict[str, Any] = {"id": est.id}
        if est.kind == "dce":
            entry["params"] = {
                "width": est.width,
                "epochs": est.epochs,
                "lr": est.lr,
                "hidden_layers": est.hidden_layers,
            }
        elif est.kind == "mmse_sample":
            entry["params"] = {"training_trials": est.training_trials}
        doc["estimators"].append(entry)
    return doc
