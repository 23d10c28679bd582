#!/usr/bin/env python3
"""Timing comparison of the numba and numpy kernel backends.

Runs every hot kernel on inference-representative shapes against both
backends and prints per-kernel wall times plus the speedup ratio.
Outputs are cross-checked while timing so a backend that drifts out of
agreement fails loudly rather than reporting a meaningless time.

Usage::

    python3 benchmarks/bench_kernels.py [--repeats N] [--quick]

The numba backend JIT-compiles on first call; a warmup pass runs
outside the timed region so compile time is excluded.
"""

import argparse
import time

import numpy as np

from hairline.kernels import _numpy

try:
    from hairline.kernels import _numba
except ImportError:
    _numba = None


def _time(fn, args, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _agree(a, b):
    if isinstance(a, tuple):
        return all(_agree(x, y) for x, y in zip(a, b))
    # numba contracts mul+add into FMAs, so float results differ in ulps
    return np.allclose(a, b, rtol=1e-9, atol=1e-12)


def _cases(quick):
    rng = np.random.default_rng(7)
    scale = 0.25 if quick else 1.0

    def dim(n):
        return max(8, int(n * scale))

    c, o, k, s = 16, 32, 3, 1
    hp = wp = dim(258)
    oh = (hp - k) // s + 1
    xp = rng.standard_normal((c, hp, wp))
    w = rng.standard_normal((o, c, k, k))
    b = rng.standard_normal(o)
    dout = rng.standard_normal((o, oh, oh))

    ph = pw = dim(256)
    px = rng.standard_normal((o, ph, pw))
    pk, pstride = 2, 2
    poh = (ph - pk) // pstride + 1
    pdout = rng.standard_normal((o, poh, poh))
    _, parg = _numpy.maxpool_forward(px, pk, pstride)

    heat = rng.standard_normal((dim(64), dim(64)))

    mask = rng.random((dim(1024), dim(1024))) < 0.08

    return [
        ("conv2d_forward", (xp, w, b, s)),
        ("conv2d_backward_input", (w, dout, s, hp, wp)),
        ("conv2d_backward_params", (xp, dout, s, k)),
        ("maxpool_forward", (px, pk, pstride)),
        ("maxpool_backward", (pdout, parg, ph, pw)),
        ("bilinear_resize", (heat, dim(1024), dim(1024))),
        ("label_components", (mask,)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3,
                    help="timed repetitions per kernel; best time wins")
    ap.add_argument("--quick", action="store_true",
                    help="shrink problem sizes for a fast smoke run")
    args = ap.parse_args()

    if _numba is None:
        print("numba backend unavailable; timing numpy only")

    cases = _cases(args.quick)

    if _numba is not None:
        for name, call_args in cases:  # warmup: trigger JIT compiles
            getattr(_numba, name)(*call_args)

    width = max(len(n) for n, _ in cases)
    header = f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, call_args in cases:
        t_np, out_np = _time(getattr(_numpy, name), call_args, args.repeats)
        if _numba is None:
            print(f"{name:<{width}}  {t_np * 1e3:>8.2f}ms  {'-':>10}  {'-':>8}")
            continue
        t_nb, out_nb = _time(getattr(_numba, name), call_args, args.repeats)
        if not _agree(out_np, out_nb):
            raise SystemExit(f"backend outputs disagree for {name}")
        print(f"{name:<{width}}  {t_np * 1e3:>8.2f}ms  {t_nb * 1e3:>8.2f}ms"
              f"  {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
