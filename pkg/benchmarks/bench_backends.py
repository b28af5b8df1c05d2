"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the relative-value-iteration sweep loop and the slot simulator
through both backends on the same inputs, checks the outputs are
bit-identical, and reports wall times.

    python benchmarks/bench_backends.py
    python benchmarks/bench_backends.py --K 400 --slots 2000000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from aoipreempt import DoubleThresholdSpec, double_threshold, new_distribution
from aoipreempt.backend import get_kernels


def run_rvi(kernels, d, K, tol=1e-10, max_iter=200_000):
    L = d.L
    q = d.padded_hazards()
    h = np.zeros((K + 1, L + 1))
    mask = np.zeros((K + 1, L + 1), dtype=bool)
    mask[1:, 0] = True
    for v2 in range(1, L):
        mask[v2:, v2] = True
    flat = np.flatnonzero(mask.ravel())
    for n in range(1, max_iter + 1):
        V, _, _, _ = kernels.rvi_sweep(h, q, K, L)
        dvals = (V - h).ravel()[flat]
        span = dvals.max() - dvals.min()
        h = V - V[1, 0]
        if span < tol:
            return h, n
    raise RuntimeError("no convergence")


def run_sim(kernels, policy, d, slots, seed=0):
    q = d.padded_hazards()
    u = np.random.default_rng(seed).random(slots)
    ages = np.zeros(slots, dtype=np.int64)
    s = np.zeros(slots, dtype=np.int64)
    dd = np.zeros(slots, dtype=np.int64)
    m = np.zeros(slots, dtype=np.int64)
    kernels.simulate_slots(np.ascontiguousarray(policy.grid), q,
                           policy.K, policy.L, u, 1, 0, ages, s, dd, m)
    return ages


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--p", default="0.4,0.2,0.2,0.2",
                        help="service pmf, comma separated")
    parser.add_argument("--K", type=int, default=300)
    parser.add_argument("--slots", type=int, default=1_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    d = new_distribution([float(x) for x in args.p.split(",")])
    policy = double_threshold(DoubleThresholdSpec(5, min(3, d.L)), args.K, d.L)

    jit = get_kernels("numba")
    pure = get_kernels("numpy")

    # Warm the JIT compile outside the timed region.
    run_rvi(jit, d, d.L + 5, max_iter=50)
    run_sim(jit, double_threshold(DoubleThresholdSpec(2, 1), d.L + 5, d.L),
            d, 2000)

    results = {}
    for name, kern in (("numba", jit), ("numpy", pure)):
        best_rvi = min(_timed(run_rvi, kern, d, args.K)
                       for _ in range(args.repeat))
        best_sim = min(_timed(run_sim, kern, policy, d, args.slots)
                       for _ in range(args.repeat))
        results[name] = (best_rvi, best_sim)

    h_jit, n_jit = run_rvi(jit, d, args.K)
    h_pure, n_pure = run_rvi(pure, d, args.K)
    ages_jit = run_sim(jit, policy, d, args.slots)
    ages_pure = run_sim(pure, policy, d, args.slots)
    identical = (np.array_equal(h_jit, h_pure) and n_jit == n_pure
                 and np.array_equal(ages_jit, ages_pure))

    print(f"pmf {args.p}  K={args.K}  rvi sweeps={n_jit}  slots={args.slots}")
    print(f"{'backend':<8} {'rvi [s]':>10} {'simulate [s]':>14}")
    for name, (t_rvi, t_sim) in results.items():
        print(f"{name:<8} {t_rvi:>10.4f} {t_sim:>14.4f}")
    speed_rvi = results["numpy"][0] / results["numba"][0]
    speed_sim = results["numpy"][1] / results["numba"][1]
    print(f"numba speedup: rvi x{speed_rvi:.1f}, simulate x{speed_sim:.1f}")
    print(f"outputs bit-identical: {identical}")
    return 0 if identical else 1


def _timed(fn, *args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


if __name__ == "__main__":
    raise SystemExit(main())
