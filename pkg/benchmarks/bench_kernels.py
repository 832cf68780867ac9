"""Compare the compiled kernels against the pure-numpy fallback.

Each backend runs in its own interpreter because the backend is chosen at
import time from ``BLOCKCOH_DISABLE_NUMBA``. Compilation happens in a warm-up
call that is not timed (numba caches compiled code on disk, so later runs
skip it).

Usage::

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from blockcoh import NUMBA_ENABLED, fixture, st_projectors
from blockcoh import _kernels
from blockcoh import measures as M
from blockcoh.analysis import dis_curve, default_grid
from blockcoh.dynamics import SimulationConfig, simulate
from blockcoh.linalg import random_state
from blockcoh.search import OptimizerBudget

repeat = int(sys.argv[1])
P = st_projectors()
rho = random_state(4, "mixed", 0).matrix
r1, r2 = fixture("ordering_pair_rho1").matrix, fixture("ordering_pair_rho2").matrix
budget = OptimizerBudget(restarts=2, max_iter=500)

cases = {
    "eigh 4x4 (x1000)": lambda: [_kernels.eigh(rho) for _ in range(1000)],
    "c_alpha_1 (x1000)": lambda: [M.c_alpha_1(rho, P, 0.3) for _ in range(1000)],
    "dis_curve 4096 points": lambda: dis_curve(r1, r2, grid=default_grid(4096)),
    "c_geo, 2 restarts": lambda: M.c_geo(rho, P, budget),
    "simulate t=2, dt=1e-3": lambda: simulate(SimulationConfig(t_end=2.0, stride=1000)),
}
out = {"numba": NUMBA_ENABLED, "times": {}}
for name, fn in cases.items():
    fn()  # warm-up (compilation for the numba backend)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["times"][name] = best
print(json.dumps(out))
"""


def run_backend(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("BLOCKCOH_DISABLE_NUMBA", None)
    if disable:
        env["BLOCKCOH_DISABLE_NUMBA"] = "1"
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(proc.stdout)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3, help="timed repetitions per case (best is reported)")
    args = parser.parse_args(argv)
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    if not fast["numba"]:
        print("numba is not importable; both columns use the numpy fallback")
    width = max(len(k) for k in fast["times"])
    print(f"{'case':<{width}}  {'numba [s]':>10}  {'numpy [s]':>10}  {'speedup':>8}")
    for name, t_fast in fast["times"].items():
        t_slow = slow["times"][name]
        print(f"{name:<{width}}  {t_fast:>10.4f}  {t_slow:>10.4f}  {t_slow / t_fast:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
