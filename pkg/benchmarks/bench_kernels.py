"""Benchmark the jit-compiled hot kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--reps 100000] [--n 1000]

Times the reflected-walk block kernel and the quadratic convolution
recursion on identical inputs and prints the per-call medians with the
speedup ratio.  The jit path is warmed up first so compilation is not
counted.
"""

import argparse
import statistics
import time

import numpy as np

from cusumkit import _kernels, models


def time_calls(fn, *args, repeat=5):
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=100_000)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--horizon", type=int, default=2000,
                        help="sequence length for the convolution recursion")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    y = np.ascontiguousarray(rng.normal(-0.5, 1.0, size=(args.reps, args.n)))
    xs = np.ascontiguousarray(
        models.NormalLLR(1.0).rectified_exp_seq(1.0, args.horizon)
    )

    rows = [("kernel", "numpy", "jit", "speedup")]
    if _kernels.HAVE_NUMBA:
        _kernels._lindley_block_jit(y[:2])  # warm-up compile
        _kernels._convolution_recursion_jit(xs[:8])

    t_np = time_calls(_kernels._lindley_block_np, y)
    t_jit = (
        time_calls(_kernels._lindley_block_jit, y)
        if _kernels.HAVE_NUMBA
        else float("nan")
    )
    rows.append((
        f"lindley ({args.reps}x{args.n})",
        f"{t_np * 1e3:.1f} ms",
        f"{t_jit * 1e3:.1f} ms",
        f"{t_np / t_jit:.2f}x" if _kernels.HAVE_NUMBA else "n/a",
    ))

    t_np = time_calls(_kernels._convolution_recursion_np, xs)
    t_jit = (
        time_calls(_kernels._convolution_recursion_jit, xs)
        if _kernels.HAVE_NUMBA
        else float("nan")
    )
    rows.append((
        f"convolution (N={args.horizon})",
        f"{t_np * 1e3:.1f} ms",
        f"{t_jit * 1e3:.1f} ms",
        f"{t_np / t_jit:.2f}x" if _kernels.HAVE_NUMBA else "n/a",
    ))

    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable: jit column skipped")


if __name__ == "__main__":
    main()
