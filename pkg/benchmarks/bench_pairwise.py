#!/usr/bin/env python3
"""Benchmark the pairwise kernels: compiled sweep vs compiled direct vs numpy.

Usage: python benchmarks/bench_pairwise.py [--sizes 256,1024,4096] [--beta 2]
"""

import argparse
import os
import time

import numpy as np


def time_call(fn, *args, budget=0.5):
    fn(*args)   # warm up
    reps, spent = 0, 0.0
    t0 = time.perf_counter()
    while spent < budget:
        fn(*args)
        reps += 1
        spent = time.perf_counter() - t0
    return spent / reps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="256,1024,4096,16384")
    ap.add_argument("--beta", type=float, default=2.0)
    ap.add_argument("--length", type=float, default=8.0)
    args = ap.parse_args()

    from agdiff import _pairwise, _pairwise_np

    if not _pairwise.compiled_available():
        print("compiled extension not available; benchmarking numpy only")

    L = args.length
    amps = np.array([-args.beta ** 2, 1.0])
    rates = np.array([args.beta, 1.0])
    rng = np.random.default_rng(0)

    print(f"double-yukawa beta={args.beta}, L={L}, "
          f"threads={_pairwise.num_threads()}")
    print(f"{'N':>7} {'sweep':>12} {'direct':>12} {'numpy':>12} "
          f"{'sweep/numpy':>12} {'max rel dev':>12}")
    for n in (int(s) for s in args.sizes.split(",")):
        x = np.sort(rng.uniform(-L / 2, L / 2, n))
        t_sweep = time_call(_pairwise.interaction_sums, x, L, amps, rates)
        t_direct = time_call(_pairwise.interaction_sums_direct, x, L, amps, rates)
        t_numpy = time_call(_pairwise_np.interaction_sums, x, L, amps, rates)
        s = _pairwise.interaction_sums(x, L, amps, rates)
        s_np = _pairwise_np.interaction_sums(x, L, amps, rates)
        dev = float(np.max(np.abs(s - s_np)) / max(1.0, np.max(np.abs(s_np))))
        print(f"{n:>7} {t_sweep*1e6:>10.1f}us {t_direct*1e6:>10.1f}us "
              f"{t_numpy*1e6:>10.1f}us {t_numpy/t_sweep:>11.1f}x {dev:>12.2e}")


if __name__ == "__main__":
    main()
