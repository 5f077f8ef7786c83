#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs each kernel on a representative workload under both cores and prints a
table of per-call times and speedups. Numba compilation happens in a warmup
pass so it does not pollute the timings.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from attnpipe import kernels
from attnpipe import _kernels_numpy

try:
    from attnpipe import _kernels_numba
except ImportError:
    _kernels_numba = None


def _time(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads():
    rng = np.random.default_rng(0)
    x1 = rng.normal(size=60_000)
    taps = rng.normal(size=1501)
    yield "fir_convolve_same (60k x 1501)", kernels.fir_convolve_same, (x1, taps)

    xc = rng.normal(size=(16, 22, 500))
    wc = rng.normal(size=(16, 22, 3))
    bc = rng.normal(size=16)
    yield "conv1d_causal (16x22x500, k3 d8)", kernels.conv1d_causal, (xc, wc, bc, 8, 1)

    dyc = rng.normal(size=(16, 16, 500))
    yield (
        "conv1d_causal_backward",
        kernels.conv1d_causal_backward,
        (xc, wc, dyc, 8, 1),
    )

    x2 = rng.normal(size=(1, 16, 64, 64))
    w2 = rng.normal(size=(16, 16, 3, 3))
    b2 = rng.normal(size=16)
    yield "conv2d_same (1x16x64x64, k3)", kernels.conv2d_same, (x2, w2, b2)

    dy2 = rng.normal(size=(1, 16, 64, 64))
    yield "conv2d_same_backward", kernels.conv2d_same_backward, (x2, w2, dy2)

    x3 = rng.normal(size=(1, 8, 8, 32, 32))
    w3 = rng.normal(size=(16, 8, 3, 3, 3))
    b3 = rng.normal(size=16)
    yield "conv3d_same (1x8x8x32x32, k3)", kernels.conv3d_same, (x3, w3, b3)

    dy3 = rng.normal(size=(1, 16, 8, 32, 32))
    yield "conv3d_same_backward", kernels.conv3d_same_backward, (x3, w3, dy3)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _kernels_numba is None:
        print("numba is not installed; nothing to compare")
        return

    header = f"{'kernel':<38} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, fn, fn_args in _workloads():
        kernels._core = _kernels_numba
        fn(*fn_args)  # warmup: trigger @njit compilation
        t_numba = _time(fn, fn_args, args.repeats)
        kernels._core = _kernels_numpy
        t_numpy = _time(fn, fn_args, args.repeats)
        print(f"{name:<38} {t_numpy*1e3:>8.2f}ms {t_numba*1e3:>8.2f}ms "
              f"{t_numpy/t_numba:>7.1f}x")


if __name__ == "__main__":
    main()
