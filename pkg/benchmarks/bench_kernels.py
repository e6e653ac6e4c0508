#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeats R]
"""

import argparse
import time

import numpy as np

from sidewidth import kernels
from sidewidth.kernels import _pykernels
from sidewidth.planefit import RansacConfig, ransac_plane


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    pts = np.ascontiguousarray(rng.normal(scale=2.0, size=(args.points, 3)))
    pts[: args.points // 2, 1] = 1.0 + rng.normal(0, 0.01, args.points // 2)
    n = np.array([0.0, 1.0, 0.0])
    d, tau = -1.0, 0.03

    backends = [("python", _pykernels)]
    if kernels.HAVE_EXTENSION:
        from sidewidth.kernels import _ckernels

        backends.insert(0, ("compiled", _ckernels))
    else:
        print("compiled extension not available; benchmarking fallback only")

    print(f"{args.points} points, best of {args.repeats}\n")
    print(f"{'kernel':<18} " + " ".join(f"{name:>12}" for name, _ in backends) +
          ("      speedup" if len(backends) == 2 else ""))
    rows = [
        ("plane_distances", lambda impl: impl.plane_distances(pts, n[0], n[1], n[2], d)),
        ("score_plane", lambda impl: impl.score_plane(pts, n[0], n[1], n[2], d, tau)),
        ("inlier_mask", lambda impl: impl.inlier_mask(pts, n[0], n[1], n[2], d, tau)),
    ]
    for name, call in rows:
        times = [time_call(lambda impl=impl: call(impl), args.repeats)
                 for _, impl in backends]
        line = f"{name:<18} " + " ".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            line += f"   {times[1] / times[0]:>8.1f}x"
        print(line)

    # end-to-end RANSAC comparison (500 seeded trials)
    cfg = RansacConfig(seed=0, max_score_points=50_000)

    def run_ransac():
        ransac_plane(pts, tau, cfg, rng=np.random.default_rng(0))

    t_active = time_call(run_ransac, args.repeats)
    print(f"\nransac_plane (500 trials, active backend = {kernels.backend_name()}): "
          f"{t_active * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
