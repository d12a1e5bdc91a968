"""Compare the numba kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

The numpy timings come from a child process started with QSPREP_NO_NUMBA=1,
since the flag is read once at import time.
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKLOAD = r"""
import json, math, random, time
import numpy as np
from qsprep import _accel, mcry
from qsprep.circuit import GRAYCODE, lower_to_basis
from qsprep.qstate import make_state, random_state
from qsprep.reduce import prepare_nflow
from qsprep.search import astar_search
from qsprep.sim import simulate

repeat = int(__import__("sys").argv[1])

def best(fn):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)

circ = lower_to_basis(prepare_nflow(random_state(14, 40, 1)), GRAYCODE)
rng = random.Random(0)
tables = []
for _ in range(200):
    c = rng.randint(1, 3)
    tables.append(mcry.RotationTable(tuple(range(2, 2 + c)),
                                     tuple(rng.uniform(-3, 3) for _ in range(1 << c))))

def solve_tables():
    mcry.clear_cache()
    for t in tables:
        mcry.exact_cnot_count(t, 0.0)

def search():
    mcry.clear_cache()
    astar_search(make_state(3, [0, 3, 5, 6]))

out = {
    "jit": _accel.JIT_ENABLED,
    "simulate_n14": best(lambda: simulate(circ)),
    "exact_mcry_200": best(solve_tables),
    "astar_small": best(search),
}
print(json.dumps(out))
"""


def run(no_numba: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if no_numba:
        env["QSPREP_NO_NUMBA"] = "1"
    else:
        env.pop("QSPREP_NO_NUMBA", None)
    proc = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    t0 = time.perf_counter()
    jit = run(False, args.repeat)
    ref = run(True, args.repeat)
    print(f"{'workload':<16} {'numba (s)':>10} {'numpy (s)':>10} {'speedup':>8}")
    for key in ("simulate_n14", "exact_mcry_200", "astar_small"):
        a, b = jit[key], ref[key]
        print(f"{key:<16} {a:>10.4f} {b:>10.4f} {b / a:>7.1f}x")
    if not jit["jit"]:
        print("note: numba is not importable, both columns ran the numpy path")
    print(f"total wall time {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
