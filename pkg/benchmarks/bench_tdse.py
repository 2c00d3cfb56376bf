"""Benchmark the real-time propagation kernel: numba JIT vs pure numpy.

The JIT path is selected by default; setting FLOQMIX_DISABLE_NUMBA=1
forces the vectorized numpy fallback. This script times both on the same
workload in subprocesses (the selection happens at import time) and
verifies that they produce identical physics.

Usage: python benchmarks/bench_tdse.py [--ramp-cycles N] [--n-k N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, os, sys, time
import numpy as np
from floqmix import _kernels
from floqmix.crystal import CrystalModel
from floqmix.floquet import DriveField
from floqmix import tdse

params = json.loads(sys.argv[1])
model = CrystalModel(lattice_constant=8.0,
                     potential_coefficients={1: -0.15, -1: -0.15,
                                             2: -0.05, -2: -0.05},
                     n_occupied_bands=1)
drive = DriveField.from_intensity(1.55 / 27.211386245988, 2e11)
config = tdse.PropagationConfig(ramp_cycles=params["ramp_cycles"],
                                sample_cycles=2, steps_per_cycle=2048,
                                samples_per_cycle=32)

# warm-up run compiles the JIT path so the timing below is steady-state
tdse.propagate_grid(model, drive, config, n_bands_kept=params["n_bands"],
                    n_k=params["n_k"])
t0 = time.perf_counter()
result = tdse.propagate_grid(model, drive, config,
                             n_bands_kept=params["n_bands"],
                             n_k=params["n_k"])
elapsed = time.perf_counter() - t0
checksum = float(np.sum(np.abs(result.samples) ** 2))
print(json.dumps({"numba": _kernels.NUMBA_ENABLED, "seconds": elapsed,
                  "checksum": checksum}))
"""


def run_variant(disable_numba: bool, params: dict) -> dict:
    env = dict(os.environ)
    if disable_numba:
        env["FLOQMIX_DISABLE_NUMBA"] = "1"
    else:
        env.pop("FLOQMIX_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", WORKER, json.dumps(params)],
                         capture_output=True, text=True, env=env, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--ramp-cycles", type=int, default=10)
    parser.add_argument("--n-k", type=int, default=8)
    parser.add_argument("--n-bands", type=int, default=16)
    args = parser.parse_args()
    params = {"ramp_cycles": args.ramp_cycles, "n_k": args.n_k,
              "n_bands": args.n_bands}

    jit = run_variant(disable_numba=False, params=params)
    plain = run_variant(disable_numba=True, params=params)
    if not jit["numba"]:
        print("warning: numba unavailable; both runs used the numpy path")
    rel = abs(jit["checksum"] - plain["checksum"]) / abs(plain["checksum"])
    print(f"workload: ramp_cycles={args.ramp_cycles} n_k={args.n_k} "
          f"n_bands={args.n_bands}")
    print(f"numba path : {jit['seconds']:8.3f} s")
    print(f"numpy path : {plain['seconds']:8.3f} s")
    print(f"speedup    : {plain['seconds'] / jit['seconds']:8.2f}x")
    print(f"checksum relative difference: {rel:.3e}")
    return 0 if rel < 1e-12 else 1


if __name__ == "__main__":
    sys.exit(main())
