"""Benchmark the compiled hot kernels against the pure-numpy fallback.

Usage: python bench/benchmark_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

from kfprop import _core_py
from kfprop.kernels import time_profiles
from kfprop.propagator import harmonic_kernel_matrix

try:
    from kfprop import _core

    HAVE_COMPILED = True
except ImportError:
    _core = None
    HAVE_COMPILED = False


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_free_apply(nx, nv, repeats):
    rng = np.random.default_rng(0)
    x = np.linspace(-8, 8, nx, endpoint=False) + 8.0 / nx
    v = np.linspace(-8, 8, nv, endpoint=False) + 8.0 / nv
    f = np.ascontiguousarray(rng.standard_normal((nx, nv)))
    prof = time_profiles(0.7)
    kmat = np.ascontiguousarray(harmonic_kernel_matrix(v, 0.7))
    args = (f, x, v, kmat, prof.sigma, prof.omega, 16.0)
    rows = {}
    rows["python"] = timeit(lambda: _core_py.free_apply_direct(*args), repeats)
    if HAVE_COMPILED:
        rows["compiled"] = timeit(lambda: _core.free_apply_direct(*args), repeats)
    return rows


def bench_shift(name, rows_n, nv, repeats):
    rng = np.random.default_rng(1)
    a = np.ascontiguousarray(rng.standard_normal((rows_n, nv)))
    delta = np.ascontiguousarray(rng.uniform(-2, 2, rows_n))
    out = {}
    out["python"] = timeit(lambda: getattr(_core_py, name)(a, delta), repeats)
    if HAVE_COMPILED:
        out["compiled"] = timeit(lambda: getattr(_core, name)(a, delta), repeats)
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    print(f"compiled core available: {HAVE_COMPILED}")
    cases = [
        ("free_apply_direct 96x48", lambda: bench_free_apply(96, 48, args.repeats)),
        ("free_apply_direct 192x64", lambda: bench_free_apply(192, 64, args.repeats)),
        ("shift_v_linear 4096x128", lambda: bench_shift("shift_v_linear", 4096, 128, args.repeats)),
        ("shift_v_cubic 4096x128", lambda: bench_shift("shift_v_cubic", 4096, 128, args.repeats)),
    ]
    print(f"{'case':<28} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for label, runner in cases:
        rows = runner()
        py = rows["python"]
        if "compiled" in rows:
            cy = rows["compiled"]
            print(f"{label:<28} {py:>9.4f}s {cy:>9.4f}s {py / cy:>7.1f}x")
        else:
            print(f"{label:<28} {py:>9.4f}s {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
