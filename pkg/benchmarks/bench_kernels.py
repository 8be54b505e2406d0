"""Benchmark the compiled rotation kernels against the pure-numpy fallback.

Usage:  python benchmarks/bench_kernels.py [--sizes 64,128,256] [--repeats 3]

Covers both kernels behind ``streamlsq.linalg``: two-sided cyclic Jacobi on a
symmetric matrix, and one-sided Jacobi on a Gram factor (the path the
bandlimited-basis construction uses at its largest sizes).
"""

import argparse
import time

import numpy as np

from streamlsq._native import _rotations_py

try:
    from streamlsq._native import _rotations as compiled
except ImportError:
    compiled = None


def time_two_sided(kernel, m, repeats):
    best = float("inf")
    for _ in range(repeats):
        a = np.ascontiguousarray(m.copy())
        v = np.eye(m.shape[0])
        start = time.perf_counter()
        kernel(a, v, 1e-11, 30)
        best = min(best, time.perf_counter() - start)
    return best


def time_one_sided(kernel, g, repeats):
    best = float("inf")
    for _ in range(repeats):
        r = np.ascontiguousarray(g.T.copy())
        v = np.eye(g.shape[1])
        start = time.perf_counter()
        kernel(r, v, 1e-13, 60)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="32,64,128,256")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if compiled is None:
        print("compiled extension not built; showing pure-python timings only")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<12} {'n':>5} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for n in sizes:
        g = rng.standard_normal((n, n))
        m = 0.5 * (g + g.T)
        t_py = time_two_sided(_rotations_py.jacobi_sweeps, m, args.repeats)
        if compiled is not None:
            t_c = time_two_sided(compiled.jacobi_sweeps, m, args.repeats)
            print(f"{'two-sided':<12} {n:>5} {t_py:>9.4f}s {t_c:>9.4f}s {t_py / t_c:>7.1f}x")
        else:
            print(f"{'two-sided':<12} {n:>5} {t_py:>9.4f}s {'-':>10} {'-':>8}")

    for n in sizes:
        factor = rng.standard_normal((2 * n, n))
        t_py = time_one_sided(_rotations_py.onesided_sweeps, factor, args.repeats)
        if compiled is not None:
            t_c = time_one_sided(compiled.onesided_sweeps, factor, args.repeats)
            print(f"{'one-sided':<12} {n:>5} {t_py:>9.4f}s {t_c:>9.4f}s {t_py / t_c:>7.1f}x")
        else:
            print(f"{'one-sided':<12} {n:>5} {t_py:>9.4f}s {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
