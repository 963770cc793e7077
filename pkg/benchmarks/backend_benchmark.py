"""Compare the compiled and NumPy kernel backends on the decoder fit loop.

The backend is fixed at import, so this script re-executes itself in a
subprocess per backend with DCE_BACKEND set, then prints a throughput table.

Usage:
    python benchmarks/backend_benchmark.py [--epochs 200]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

CASES = [
    ("single antenna (2x64x64, k=8)", 1, 8),
    ("16 antennas (32x64x64, k=16)", 16, 16),
    ("64 antennas (128x64x64, k=16)", 64, 16),
]


def measure(epochs: int) -> dict:
    import numpy as np

    from dce.decoder import DecoderArch, active_backend, fit
    from dce.numerics import RngStream

    results = {"backend": active_backend(), "cases": []}
    for label, m, k in CASES:
        arch = DecoderArch(6, k, 2 * m, 64, 64)
        target = RngStream(1).generator().standard_normal((2 * m, 64, 64))
        fit(arch, target, 10, 0.01, RngStream(2))  # warm-up
        t0 = time.perf_counter()
        fit(arch, target, epochs, 0.01, RngStream(2))
        per_epoch = (time.perf_counter() - t0) / epochs
        results["cases"].append({"label": label, "ms_per_epoch": per_epoch * 1000})
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--single", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.single:
        print(json.dumps(measure(args.epochs)))
        return 0

    rows = {}
    for backend in ("numpy", "cython"):
        env = dict(os.environ, DCE_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, __file__, "--single", "--epochs", str(args.epochs)],
            env=env,
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            print(f"{backend}: unavailable ({proc.stderr.strip().splitlines()[-1]})")
            continue
        rows[backend] = json.loads(proc.stdout)

    if not rows:
        return 1
    print(f"{'configuration':<34} " + " ".join(f"{b:>12}" for b in rows) + "   speedup")
    for i, (label, _, _) in enumerate(CASES):
        cells = [rows[b]["cases"][i]["ms_per_epoch"] for b in rows]
        line = f"{label:<34} " + " ".join(f"{c:>9.2f} ms" for c in cells)
        if len(cells) == 2 and cells[1] > 0:
            line += f"   {cells[0] / cells[1]:.2f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
