"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs itself twice in subprocesses, once per backend (BLKSURV_NUMBA=1/0),
and prints a side-by-side table. Numba compile time is excluded by a
warm-up pass.

    python3 benchmarks/bench_kernels.py
"""
import json
import os
import subprocess
import sys
import time

import numpy as np


def _time(fn, repeats=5):
    fn()  # warm-up: jit compilation, cache priming
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def run_inner():
    from blksurv import _accel
    from blksurv.dynprior import StationarySpec, stationary_cov
    from blksurv.engine import fit, simulate
    from blksurv.guide import GuideMethod
    from blksurv.hazards import log_grid
    from blksurv.specfun import digamma, inverse_trigamma, trigamma

    rng = np.random.default_rng(0)
    xs = 10.0 ** rng.uniform(-3, 3, 1_000_000)
    qs = 10.0 ** rng.uniform(-4, 4, 100_000)

    grid = log_grid(500.0, 0.1, 10)
    spec = StationarySpec(np.array([-6.0, 0.1, 0.0, 0.1, 0.0]),
                          np.diag([0.04, 0.01, 0.01, 0.01, 0.01]), 0.92, 0.0)
    prior = stationary_cov(spec, 10)
    chol = np.linalg.cholesky(prior.cov)
    beta = (prior.mean_stack + chol @ rng.standard_normal(50)).reshape(10, 5)
    design_small = np.hstack([np.ones((1000, 1)), rng.uniform(-0.5, 0.5, (1000, 4))])
    design_big = np.hstack([np.ones((100_000, 1)),
                            rng.uniform(-0.5, 0.5, (100_000, 4))])
    records = simulate(grid, beta, design_small, 0.15, seed=1)

    results = {
        "backend": "numba" if _accel.USE_NUMBA else "numpy",
        "digamma 1e6": _time(lambda: digamma(xs)),
        "trigamma 1e6": _time(lambda: trigamma(xs)),
        "inverse_trigamma 1e5": _time(lambda: inverse_trigamma(qs)),
        "fit 1000x10x4 (log-mode)": _time(
            lambda: fit(records, grid, spec, GuideMethod.LOG_MODE)),
        "fit 1000x10x4 (log-moment)": _time(
            lambda: fit(records, grid, spec, GuideMethod.LOG_MOMENT)),
        "simulate 1e5": _time(
            lambda: simulate(grid, beta, design_big, 0.15, seed=2)),
    }
    print(json.dumps(results))


def main():
    here = os.path.abspath(__file__)
    rows = {}
    for flag in ("1", "0"):
        env = dict(os.environ, BLKSURV_NUMBA=flag)
        try:
            out = subprocess.run([sys.executable, here, "--inner"], env=env,
                                 capture_output=True, text=True, check=True)
        except subprocess.CalledProcessError as exc:
            if flag == "1":
                print("numba backend unavailable, skipping:",
                      exc.stderr.strip().splitlines()[-1])
                continue
            raise
        rows[flag] = json.loads(out.stdout.strip().splitlines()[-1])

    if not rows:
        return
    keys = [k for k in next(iter(rows.values())) if k != "backend"]
    have_both = "1" in rows and "0" in rows
    header = f"{'kernel':<30}"
    for flag in ("1", "0"):
        if flag in rows:
            header += f"{rows[flag]['backend']:>12}"
    if have_both:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for key in keys:
        line = f"{key:<30}"
        for flag in ("1", "0"):
            if flag in rows:
                line += f"{rows[flag][key] * 1e3:>10.2f}ms"
        if have_both:
            line += f"{rows['0'][key] / rows['1'][key]:>9.2f}x"
        print(line)


if __name__ == "__main__":
    if "--inner" in sys.argv:
        run_inner()
    else:
        main()
