"""Compare the compiled and numpy Euler-Maruyama kernels.

    python3 benchmarks/bench_em.py [--steps N] [--repeat R]

Runs one batch of trajectories of the 6-variable readout model through each
available backend and reports throughput in trajectory-steps per second.
"""

import argparse
import time

import numpy as np

from optoent.kernels import BACKENDS
from optoent.model import resolve_model
from optoent.readout import BATCH, CHUNK, build_extended, default_trajectory_config, make_readout
from optoent.sweep import preset


def bench(fn, a, scale, dt, steps, repeat):
    n = a.shape[0]
    rng = np.random.default_rng(0)
    noise = rng.standard_normal((BATCH, CHUNK, n))
    best = float("inf")
    for _ in range(repeat):
        u = np.zeros((BATCH, n))
        acc = np.zeros((BATCH, n, n))
        t0 = time.perf_counter()
        for _ in range(steps // CHUNK):
            fn(a, scale, dt, u, noise, acc, 0, np.zeros((BATCH, 0, n)), 0)
        best = min(best, time.perf_counter() - t0)
    return best, acc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=CHUNK * 64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    spec = preset("fig1-5ng")
    d = resolve_model(spec.base)
    m = build_extended(d, make_readout(d, spec.base))
    dt = default_trajectory_config(m).dt
    a = np.ascontiguousarray(m.drift)
    scale = np.sqrt(np.diag(m.diffusion) * dt)

    results = {}
    for name, fn in sorted(BACKENDS.items()):
        secs, acc = bench(fn, a, scale, dt, args.steps, args.repeat)
        results[name] = acc
        rate = BATCH * args.steps / secs
        print(f"{name:>7}: {secs:8.3f} s  {rate:12.3e} trajectory-steps/s")
    if len(results) == 2:
        diff = np.max(np.abs(np.triu(results["cython"]) - np.triu(results["python"])))
        scale_acc = np.max(np.abs(results["python"]))
        print(f"max relative accumulator difference: {diff / scale_acc:.2e}")


if __name__ == "__main__":
    main()
