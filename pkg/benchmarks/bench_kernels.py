"""Timing for the packed popcount kernel, numba vs numpy.

Both backends are imported directly so the comparison ignores
SBMPEEL_BACKEND; the env var only picks the default used by the library.

Usage: python3 benchmarks/bench_kernels.py [--reps 30] [--sizes 1000,4000,12000]
"""

import argparse
import time

import numpy as np

from sbmpeel._kernels import _build_numba, _counts_numpy


def bench(fn, rows, mask, reps):
    fn(rows, mask)  # warmup (jit compile / cache touch)
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(rows, mask)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=30)
    ap.add_argument("--sizes", default="1000,4000,12000")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    try:
        numba_fn = _build_numba()
    except ImportError:
        numba_fn = None
        print("numba not importable, timing numpy only")

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>7} {'words':>6} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for tok in args.sizes.split(","):
        n = int(tok)
        words = (n + 63) // 64
        rows = rng.integers(0, 2**64, size=(n, words), dtype=np.uint64)
        mask = rng.integers(0, 2**64, size=words, dtype=np.uint64)

        t_np = bench(_counts_numpy, rows, mask, args.reps)
        if numba_fn is None:
            print(f"{n:>7} {words:>6} {t_np * 1e3:>9.3f}ms {'-':>10} {'-':>8}")
            continue
        t_nb = bench(numba_fn, rows, mask, args.reps)
        if not np.array_equal(_counts_numpy(rows, mask), numba_fn(rows, mask)):
            raise SystemExit("backends disagree, benchmark aborted")
        print(
            f"{n:>7} {words:>6} {t_np * 1e3:>9.3f}ms {t_nb * 1e3:>9.3f}ms "
            f"{t_np / t_nb:>7.2f}x"
        )


if __name__ == "__main__":
    main()
