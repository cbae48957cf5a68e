"""Benchmark the compiled convolution kernels against the numpy fallback.

Run: python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from hfguide.kernels import _conv_py

try:
    from hfguide.kernels import _conv_cy
except ImportError:
    _conv_cy = None


def bench(fn, *args, repeats=20):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    cases = [
        ("32x32x3 k3x3x3->8", (32, 32, 3), (3, 3, 3, 8)),
        ("64x64x8 k3x3x8->8", (64, 64, 8), (3, 3, 8, 8)),
        ("128x128x4 k3x3x4->4", (128, 128, 4), (3, 3, 4, 4)),
    ]
    print(f"{'case':28s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, xs, ws in cases:
        x = np.ascontiguousarray(rng.standard_normal(xs))
        w = np.ascontiguousarray(rng.standard_normal(ws))
        tp = bench(_conv_py.conv2d_mc, x, w, "replicate")
        if _conv_cy is None:
            print(f"{name:28s} {tp * 1e3:9.3f}ms {'n/a':>10s} {'n/a':>8s}")
            continue
        tc = bench(_conv_cy.conv2d_mc, x, w, "replicate")
        out_p = _conv_py.conv2d_mc(x, w, "replicate")
        out_c = _conv_cy.conv2d_mc(x, w, "replicate")
        assert np.allclose(out_p, out_c, atol=1e-12), "backend mismatch"
        print(f"{name:28s} {tp * 1e3:9.3f}ms {tc * 1e3:9.3f}ms {tp / tc:7.2f}x")


if __name__ == "__main__":
    main()
