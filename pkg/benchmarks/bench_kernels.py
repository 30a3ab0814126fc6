"""Time each numba kernel against its numpy fallback on synthetic inputs.

    python benchmarks/bench_kernels.py [--repeat N] [--scale S]
"""

import argparse
import time

import numpy as np

from relsmt._kernels import KERNELS


def _cells(rng, n_cols, max_cells, n_params):
    lens = rng.integers(1, max_cells + 1, size=n_cols)
    col_ptr = np.concatenate(([0], np.cumsum(lens))).astype(np.int64)
    n = int(col_ptr[-1])
    cell_param = rng.integers(0, n_params, size=n).astype(np.int64)
    cell_prior = rng.random(n)
    t = rng.random(n_params) + 1e-3
    return col_ptr, cell_param, cell_prior, t


def make_inputs(scale):
    rng = np.random.default_rng(0)
    n_params = 50_000
    col_ptr, cell_param, cell_prior, t = _cells(rng, 200_000 * scale, 20, n_params)
    a = rng.integers(0, 26, size=40).astype(np.int64)
    b = rng.integers(0, 26, size=40).astype(np.int64)
    n_sent = 500 * scale
    ptr = np.arange(0, 100 * n_sent + 1, 100, dtype=np.int64)
    inter = rng.normal(size=int(ptr[-1]))
    slope = np.round(rng.normal(size=int(ptr[-1])), 2)
    return {
        "em_step": (col_ptr, cell_param, cell_prior, t, n_params),
        "viterbi_cells": (col_ptr, cell_param, cell_prior, t),
        "lcs_length": (a, b),
        "upper_envelopes": (inter, slope, ptr),
    }


def best_time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--scale", type=int, default=1)
    args = p.parse_args(argv)
    inputs = make_inputs(args.scale)
    print(f"{'kernel':<16} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, (fast, slow) in KERNELS.items():
        fast(*inputs[name])  # compile outside the timing
        tf = best_time(fast, inputs[name], args.repeat)
        ts = best_time(slow, inputs[name], args.repeat)
        print(f"{name:<16} {1e3 * tf:>10.3f} {1e3 * ts:>10.3f} {ts / tf:>7.1f}x")


if __name__ == "__main__":
    main()
