#!/usr/bin/env python
"""Benchmark the numba builds of the hot kernels against the numpy fallbacks.

Imports both implementation modules directly, so it ignores the
FRACWALK_BACKEND env flag.  The jit functions are called once to compile
before timing.

Usage: python benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from fracwalk import Modulus, build_K, build_Q, uniform_step
from fracwalk import _plain

try:
    from fracwalk import _jit
except ImportError:
    _jit = None
    print("numba not importable: nothing to compare")
    raise SystemExit(0)


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eigensolve(repeat):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((600, 600))
    a = 0.5 * (a + a.T)

    def solve(mod):
        d, e, q = mod.tridiagonalize(a.copy())
        zt = np.ascontiguousarray(q.T)
        assert mod.tqli(d, e, zt) == -1
        return d

    return "dense eigensolve 600x600", solve


def bench_evolution(repeat):
    k = build_K(uniform_step((0, 1)), Modulus(1009))
    block = np.eye(1009)

    def run(mod):
        cur = block
        for _ in range(30):
            cur = mod.mat_csr(cur, k.indptr, k.indices, k.probs)
        return cur

    return "all-starts evolution p=1009, 30 steps", run


def bench_cut(repeat):
    q = build_Q(uniform_step((-1, 0, 1)), Modulus(19))
    w = q.to_dense()

    def run(mod):
        return mod.min_cut_exhaustive(w, 9)

    return "exhaustive bottleneck scan, 19 states", run


def bench_table(repeat):
    def run(mod):
        return mod.inverse_table(2000003)

    return "inverse table p ~ 2e6", run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cases = [bench_eigensolve, bench_evolution, bench_cut, bench_table]
    print(f"{'kernel':<42} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for case in cases:
        name, run = case(args.repeat)
        run(_jit)  # compile outside the timing
        t_plain = timed(lambda: run(_plain), args.repeat)
        t_jit = timed(lambda: run(_jit), args.repeat)
        print(f"{name:<42} {t_plain:>9.3f}s {t_jit:>9.3f}s {t_plain / t_jit:>8.1f}x")


if __name__ == "__main__":
    main()
