"""Time the numba kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Both paths are always importable, so one process can time both regardless of
``FBSC_NUMBA``. Compilation is triggered before timing.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fbsc import kernels


def cases(rng):
    g = (rng.random(200_000) < 0.05).astype(np.uint8)
    err = rng.random((64, 64, 64))
    ys = kernels.patch_starts(64, 4, 2)
    scores = rng.random(200_000)
    labels = rng.random(200_000) < 0.2
    return {
        "future_window_max (T=2e5, alpha=72)": lambda impl: impl.future_window_max(g, 72),
        "patch_max_mean (64 maps of 64x64, 4/2)": lambda impl: impl.patch_max_mean(err, ys, ys, 4),
        "rank_auc (2e5 frames)": lambda impl: impl.rank_auc(scores, labels),
    }


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':42s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        ref, fast = fn(kernels.numpy_impl), fn(kernels.numba_impl)
        np.testing.assert_allclose(fast, ref, rtol=1e-12)
        t_np = min(timeit.repeat(lambda fn=fn: fn(kernels.numpy_impl), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda fn=fn: fn(kernels.numba_impl), number=1, repeat=args.repeat))
        print(f"{name:42s} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
