"""Named experiment presets covering the benchmark regimes.

Each preset returns a plain config document (see README schema); edit the
returned JSON or pass --seed/--threads to vary a run. Presets keep trial
counts modest; raise run.trials for smoother curves.
"""

from __future__ import annotations

import copy


def _base(m: int, snr: list) -> dict:
    return {
        "channel": {"kind": "tdl"},
        "grid": {"m": m, "n_f": 64, "n": 64, "k_users": 1, "n_p": 1,
                 "arrangement": "block_symbol"},
        "noise": {"snr_db": snr},
        "estimators": [],
        "run": {"trials": 20, "seed": 1, "threads": 1},
    }


def _fig1() -> dict:
    cfg = _base(64, [0.0, 5.0, 10.0, 15.0, 20.0])
    cfg["grid"]["k_users"] = 4
    cfg["estimators"] = [{"id": "ls"}, {"id": "mmse_genie"}]
    cfg["run"]["trials"] = 200
    cfg["se"] = {"enable": True, "combiners": ["mr", "zf", "mmse"],
                 "prefactor": "as_paper"}
    return cfg


def _fig4() -> dict:
    cfg = _base(1, [0.0, 5.0, 10.0, 15.0, 20.0])
    cfg["estimators"] = [
        {"id": "dce_k8", "preset": "k8"},
        {"id": "dce_k16", "preset": "k16"},
        {"id": "dce_k32", "preset": "k32"},
        {"id": "dce_k64", "preset": "k64"},
        {"id": "ls"},
        {"id": "mmse_sample", "params": {"training_trials": 500}},
        {"id": "mmse_genie"},
    ]
    return cfg


def _fig5() -> dict:
    # pilot-length study; rerun with grid.n_p in {1, 2, 4} to sweep
    cfg = _base(64, [0.0, 5.0, 10.0, 15.0, 20.0])
    cfg["grid"]["n_p"] = 4
    cfg["estimators"] = [{"id": "dce_k16", "preset": "k16"}, {"id": "ls"}]
    cfg["run"]["trials"] = 10
    return cfg


def _fig6() -> dict:
    cfg = _base(64, [0.0, 5.0, 10.0, 15.0, 20.0])
    cfg["estimators"] = [
        {"id": "dce_k16", "preset": "k16"},
        {"id": "ls"},
        {"id": "mmse_sample", "params": {"training_trials": 500}},
        {"id": "mmse_genie"},
    ]
    return cfg


def _fig7a() -> dict:
    cfg = _fig6()
    cfg["grid"]["arrangement"] = "random_tones"
    cfg["contamination"] = {"kind": "random_res", "fraction": 0.05, "sir_db": 6.0}
    return cfg


def _fig7b() -> dict:
    cfg = _fig6()
    cfg["grid"]["arrangement"] = "random_tones"
    cfg["contamination"] = {"kind": "contiguous_blocks", "blocks": 2, "sir_db": 10.0}
    return cfg


def _iid_control() -> dict:
    cfg = _base(1, [10.0])
    cfg["channel"]["kind"] = "iid_per_re"
    cfg["estimators"] = [{"id": "dce_k8", "preset": "k8"}, {"id": "ls"}]
    return cfg


_PRESETS = {
    "fig1": _fig1,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7a": _fig7a,
    "fig7b": _fig7b,
    "iid_control": _iid_control,
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def experiment_preset(name: str) -> dict:
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    return copy.deepcopy(_PRESETS[name]())
