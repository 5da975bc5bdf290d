#!/usr/bin/env python3
"""Throughput comparison of the numba kernels against the numpy twins,
plus the exact-vs-FFT correlation paths.

Run: python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

from crossview import matching
from crossview.kernels import get_backend


def _time(fn, repeats):
    fn()  # warm-up (JIT compile / cache touch)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_conv(backends, repeats):
    rng = np.random.default_rng(0)
    img = rng.standard_normal((128, 128, 8))
    w = rng.standard_normal((3, 3, 8, 16))
    b = rng.standard_normal(16)
    dout_shape = backends["numpy"].conv2d_forward(img, w, b, 1, 1, True, True).shape
    dout = rng.standard_normal(dout_shape)
    rows = []
    for name, mod in backends.items():
        fwd = _time(lambda: mod.conv2d_forward(img, w, b, 1, 1, True, True), repeats)
        bwd = _time(lambda: mod.conv2d_backward(img, w, dout, 1, 1, True, True), repeats)
        rows.append((f"conv 128x128x8->16 fwd [{name}]", fwd))
        rows.append((f"conv 128x128x8->16 bwd [{name}]", bwd))
    return rows


def bench_pool(backends, repeats):
    rng = np.random.default_rng(1)
    img = rng.standard_normal((128, 128, 16))
    dout = rng.standard_normal((64, 64, 16))
    rows = []
    for name, mod in backends.items():
        fwd = _time(lambda: mod.maxpool_forward(img, 2, 2, 2, 2), repeats)
        bwd = _time(lambda: mod.maxpool_backward(img, dout, 2, 2, 2, 2), repeats)
        rows.append((f"maxpool 128x128x16 fwd [{name}]", fwd))
        rows.append((f"maxpool 128x128x16 bwd [{name}]", bwd))
    return rows


def bench_sampling(backends, repeats):
    rng = np.random.default_rng(2)
    src = rng.standard_normal((370, 370, 3))
    u = rng.uniform(0, 370, (128, 512))
    v = rng.uniform(0, 370, (128, 512))
    rows = []
    for name, mod in backends.items():
        t = _time(lambda: mod.bilinear_sample(src, u, v), repeats)
        rows.append((f"bilinear 370^2 -> 512x128 [{name}]", t))
    return rows


def bench_correlation(backends, repeats):
    rng = np.random.default_rng(3)
    fa = rng.standard_normal((4, 64, 16))
    fg = rng.standard_normal((4, 16, 16))
    rows = []
    for name, mod in backends.items():
        t = _time(lambda: mod.cyclic_corr(fa, fg), max(1, repeats // 4))
        rows.append((f"cyclic corr Wa=64 Wg=16 H=4 C=16 exact [{name}]", t))
    rows.append((
        "cyclic corr Wa=64 Wg=16 H=4 C=16 fft [numpy]",
        _time(lambda: matching.fft_correlation(fa, fg), repeats),
    ))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    backends = {"numpy": get_backend("numpy")}
    try:
        backends["numba"] = get_backend("numba")
    except ImportError:
        print("numba not importable; benchmarking the numpy backend only")

    rows = []
    rows += bench_conv(backends, args.repeats)
    rows += bench_pool(backends, args.repeats)
    rows += bench_sampling(backends, args.repeats)
    rows += bench_correlation(backends, args.repeats)

    width = max(len(name) for name, _ in rows)
    print(f"{'kernel':<{width}}  {'per call':>12}")
    print("-" * (width + 14))
    for name, t in rows:
        print(f"{name:<{width}}  {t * 1e3:>10.3f}ms")

    if "numba" in backends:
        print("\nspeedup (numpy time / numba time):")
        by_name = dict(rows)
        for name in by_name:
            if name.endswith("[numba]"):
                twin = name.replace("[numba]", "[numpy]")
                if twin in by_name and by_name[name] > 0:
                    print(f"  {name[:-8]:<{width - 8}}  {by_name[twin] / by_name[name]:>6.1f}x")


if __name__ == "__main__":
    main()
