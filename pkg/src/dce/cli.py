"""Command-line front end: experiment sweeps, gradient checks, single fits,
and decoder preset weight-count verification.

Exit codes: 0 success, 1 invalid configuration (message names the offending
key), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bench import build_scene, fit_stream, nmse as _nmse, run_experiment, summarize
from .config import DECODER_EPOCHS, ConfigError, config_to_dict, resolve_config, run_threads
from .decoder import (
    DecoderArch,
    NonFiniteLoss,
    active_backend,
    finite_difference_check,
    weight_count,
)
from .estimators import dce_estimate
from .numerics import RngStream
from .presets import PRESET_NAMES, experiment_preset

GRADCHECK_ARCHES = {
    "small": DecoderArch(3, 4, 4, 8, 8),
    "tiny": DecoderArch(2, 3, 2, 4, 4),
}

# decoder preset weight counts that cmd_tables verifies
EXPECTED_COUNTS = {
    1: {8: 496, 16: 1760, 32: 6592, 64: 25472},
    2: {8: 1504, 16: 3776, 32: 10624, 64: 33536},
}
TABLE_OUT_CHANNELS = {1: 2, 2: 128}


def _fmt(x: float) -> str:
    """Shortest round-trip decimal; keeps CSV output byte-stable."""
    return repr(float(x))


def _load_config_document(path: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    # a manifest embeds the resolved config it was produced from
    if "config" in doc and "channel" not in doc:
        return doc["config"]
    return doc


def _resolve_from_args(args) -> tuple[dict, object]:
    if getattr(args, "preset", None):
        raw = experiment_preset(args.preset)
    elif getattr(args, "config", None):
        raw = _load_config_document(args.config)
    else:
        raise ConfigError("missing config: give a config file path or --preset")
    if args.seed is not None:
        raw.setdefault("run", {})["seed"] = args.seed
    return raw, resolve_config(raw)


def _threads(args, raw: dict) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("DCE_THREADS")
    if env:
        return max(1, int(env))
    return max(1, run_threads(raw))


def cmd_sweep(args) -> int:
    raw, config = _resolve_from_args(args)
    threads = _threads(args, raw)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = run_experiment(config, threads=threads)

    results_path = out_dir / "results.csv"
    with open(results_path, "w") as fh:
        fh.write("estimator,snr_db,sir_db,trial,metric,value\n")
        for r in records:
            sir = "" if r.sir_db is None else _fmt(r.sir_db)
            fh.write(
                f"{r.estimator},{_fmt(r.snr_db)},{sir},{r.trial},{r.metric},{_fmt(r.value)}\n"
            )

    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w") as fh:
        fh.write("estimator,snr_db,sir_db,metric,mean,std,trials\n")
        for row in summarize(records):
            sir = "" if row["sir_db"] is None else _fmt(row["sir_db"])
            fh.write(
                f"{row['estimator']},{_fmt(row['snr_db'])},{sir},{row['metric']},"
                f"{_fmt(row['mean'])},{_fmt(row['std'])},{row['trials']}\n"
            )

    manifest = {
        "artifact_version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "base_seed": config.seed,
        "backend": active_backend(),
        "threads": threads,
        "outputs": {"results": str(results_path), "summary": str(summary_path)},
        "config": config_to_dict(config, threads=threads),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")

    print(f"wrote {results_path} ({len(records)} records), {summary_path}")
    return 0


def cmd_gradcheck(args) -> int:
    arch = GRADCHECK_ARCHES[args.arch]
    result = finite_difference_check(arch, RngStream(args.seed if args.seed is not None else 0))
    print(
        f"gradcheck arch={args.arch} backend={active_backend()} "
        f"max_rel_err={result.max_rel_err:.3e} tolerance={args.tolerance:g}"
    )
    if result.max_rel_err <= args.tolerance:
        return 0
    print(
        f"FAILED at {result.worst_label}{result.worst_index}: "
        f"analytic={result.analytic:.9g} numeric={result.numeric:.9g}",
        file=sys.stderr,
    )
    return 2


def cmd_fit_one(args) -> int:
    raw, config = _resolve_from_args(args)
    dce_specs = [e for e in config.estimators if e.kind == "dce"]
    if not dce_specs:
        raise ConfigError("missing config key: estimators[] needs a dce entry for fit-one")
    est = dce_specs[0]
    snr = config.snr_db[0]
    grid = build_scene(config, snr, trial=0)
    arch = DecoderArch(
        est.hidden_layers, est.width, 2 * config.channel.m,
        config.channel.n_f, config.channel.n,
    )
    stream = fit_stream(config, trial=0, estimator_index=config.estimators.index(est))
    try:
        estimate = dce_estimate(grid, arch, est.epochs, est.lr, stream)
    except NonFiniteLoss as exc:
        print(f"fit diverged: {exc}", file=sys.stderr)
        return 2
    report = estimate.report
    if args.dump_loss:
        with open(args.dump_loss, "w") as fh:
            fh.write("epoch,loss\n")
            for i, loss in enumerate(report.loss_trace):
                fh.write(f"{i},{_fmt(loss)}\n")
        print(f"wrote {args.dump_loss} ({report.epochs} epochs)")
    value = _nmse(grid.scene.channels[0], estimate.h_hat)
    print(
        f"estimator={est.id} snr_db={_fmt(snr)} epochs={report.epochs} "
        f"final_loss={_fmt(report.final_loss)} final_nmse={_fmt(value)} "
        f"fit_seconds={estimate.fit_seconds:.1f}"
    )
    return 0


def cmd_tables(args) -> int:
    out_channels = TABLE_OUT_CHANNELS[args.table]
    expected = EXPECTED_COUNTS[args.table]
    epochs_table = DECODER_EPOCHS[out_channels]
    ok = True
    print(f"table {args.table} (output channels {out_channels}):")
    print("k     epochs   weights  expected")
    for k in sorted(expected):
        arch = DecoderArch(6, k, out_channels, 64, 64)
        got = weight_count(arch)
        mark = "" if got == expected[k] else "  MISMATCH"
        ok = ok and got == expected[k]
        print(f"{k:<5} {epochs_table[k]:<8} {got:<8} {expected[k]}{mark}")
    if not ok:
        print("weight counts do not match the expected values", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dce", description="Deep channel estimation workbench"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a Monte Carlo experiment to CSV")
    p_sweep.add_argument("config", nargs="?", help="config JSON (or a manifest.json)")
    p_sweep.add_argument("--preset", choices=PRESET_NAMES, help="built-in experiment")
    p_sweep.add_argument("--out", default=".", help="output directory")
    p_sweep.add_argument("--seed", type=int, default=None, help="override base seed")
    p_sweep.add_argument("--threads", type=int, default=None,
                         help="worker processes (env DCE_THREADS as fallback)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p_grad.add_argument("--arch", choices=sorted(GRADCHECK_ARCHES), default="small")
    p_grad.add_argument("--tolerance", type=float, default=1e-5)
    p_grad.add_argument("--seed", type=int, default=None)
    p_grad.set_defaults(func=cmd_gradcheck)

    p_fit = sub.add_parser("fit-one", help="fit a single grid and dump the loss trace")
    p_fit.add_argument("config", nargs="?", help="config JSON (or a manifest.json)")
    p_fit.add_argument("--preset", choices=PRESET_NAMES)
    p_fit.add_argument("--dump-loss", default=None, help="loss trace CSV path")
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.set_defaults(func=cmd_fit_one)

    p_tab = sub.add_parser("tables", help="verify decoder preset weight counts")
    p_tab.add_argument("--table", type=int, choices=(1, 2), required=True)
    p_tab.set_defaults(func=cmd_tables)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KeyError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
