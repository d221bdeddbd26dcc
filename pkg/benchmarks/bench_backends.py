#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the two hot paths (per-frame mask metrics and the change-point
dynamic program) on realistic sizes and prints a comparison table.

    python3 benchmarks/bench_backends.py [--frames 480x854] [--repeats 20]
"""

import argparse
import time

import numpy as np

from loomkit._kernels import _numpy_impl

try:
    from loomkit._kernels import _speedups
except ImportError:
    _speedups = None


def blob_mask(rng, height, width):
    cy, cx = rng.uniform(0.2, 0.8) * height, rng.uniform(0.2, 0.8) * width
    radius = rng.uniform(0.1, 0.35) * min(height, width)
    ys, xs = np.mgrid[0:height, 0:width]
    return (((ys - cy) ** 2 + (xs - cx) ** 2) <= radius**2).astype(np.uint8)


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_mask_metrics(impl, masks, tolerance, repeats):
    def run():
        for a, b in masks:
            impl.mask_overlap(a, b)
            pb = impl.boundary_map(a)
            gb = impl.boundary_map(b)
            impl.boundary_match_counts(pb, gb, tolerance)

    return time_call(run, repeats)


def bench_kts(impl, gram, max_changes, repeats):
    def run():
        scatter = impl.kts_scatter_table(gram)
        impl.kts_dp(scatter, max_changes)

    return time_call(run, repeats)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--frames", default="480x854", help="HxW of benchmark masks")
    parser.add_argument("--pairs", type=int, default=8, help="mask pairs per run")
    parser.add_argument("--kts-frames", type=int, default=400, dest="kts_frames")
    parser.add_argument("--max-changes", type=int, default=24, dest="max_changes")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    height, width = (int(v) for v in args.frames.split("x"))
    rng = np.random.default_rng(0)
    masks = [(blob_mask(rng, height, width), blob_mask(rng, height, width)) for _ in range(args.pairs)]
    tolerance = max(1, round(0.008 * float(np.hypot(height, width))))
    x = rng.normal(size=(args.kts_frames, 16))
    gram = x @ x.T

    backends = [("numpy", _numpy_impl)]
    if _speedups is not None:
        backends.append(("compiled", _speedups))
    else:
        print("compiled extension not available; benchmarking the fallback only")

    rows = []
    for name, impl in backends:
        mask_t = bench_mask_metrics(impl, masks, tolerance, args.repeats)
        kts_t = bench_kts(impl, gram, args.max_changes, args.repeats)
        rows.append((name, mask_t, kts_t))

    print(
        f"\nmask metrics: {args.pairs} pairs at {height}x{width} (tolerance {tolerance}px); "
        f"kts: n={args.kts_frames}, m={args.max_changes}; best of {args.repeats}\n"
    )
    print(f"{'backend':<10} {'mask metrics':>14} {'kts dp':>12}")
    for name, mask_t, kts_t in rows:
        print(f"{name:<10} {mask_t * 1e3:>11.1f} ms {kts_t * 1e3:>9.1f} ms")
    if len(rows) == 2:
        print(
            f"{'speedup':<10} {rows[0][1] / rows[1][1]:>12.1f}x {rows[0][2] / rows[1][2]:>10.1f}x"
        )


if __name__ == "__main__":
    main()
