#!/usr/bin/env python3
"""Timing comparison of the two kernel lanes (numba vs pure numpy).

Run:  python benchmarks/bench_kernels.py [--sizes 100000 400000]

The same dispatch is controlled package-wide by QCSURGERY_NO_NUMBA=1,
which forces the numpy lane; here both lanes are loaded side by side.
"""

import argparse
import math
import time

import numpy as np

from qcsurgery import _kernels as K


def _time(fn, *args, repeats=5):
    fn(*args)  # warm-up (and JIT compile for the numba lane)
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[200000])
    args = ap.parse_args()

    numpy_lane = K.numpy_lane()
    numba_lane = K.numba_lane()
    if numba_lane is None:
        raise SystemExit("numba unavailable: nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<22} {'n':>8} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for n in args.sizes:
        zs = rng.uniform(-30, 25, n) + 1j * rng.uniform(-25, 25, n)
        xs = rng.uniform(-30, 30, n)
        k = 1 / 3
        c = math.log(6) / 3
        cases = [
            ("log_g_values(m=1)", lambda lane: lane["log_g_values"](1, zs)),
            ("log_gpg_values(m=2)", lambda lane: lane["log_gpg_values"](2, zs)),
            ("ll_g_real(m=1)", lambda lane: lane["ll_g_real"](1, xs)),
            ("phi_values(0,1)", lambda lane: lane["phi_values"](
                0, 1, k, c, xs, 1e-12)),
        ]
        for name, call in cases:
            t_np = _time(lambda: call(numpy_lane))
            t_nb = _time(lambda: call(numba_lane))
            print(f"{name:<22} {n:>8} {t_np * 1e3:>9.1f}ms {t_nb * 1e3:>9.1f}ms "
                  f"{t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
