"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N wall time of each backend,
the speedup, and whether both backends returned identical results.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gaugelat import _kernels_py

try:
    from gaugelat import _kernels
except ImportError:
    _kernels = None


def _cases(rng):
    breaks = np.linspace(0.0, 1.0, 4097)
    values = rng.normal(size=(4096, 3))
    t = rng.random(200_000)
    masses = rng.random(200_000)
    den = 1 << 20
    tag_num = rng.integers(0, den, size=200_000)
    mass_num = rng.integers(0, 64, size=200_000)
    lo = rng.random(2000) * 0.99
    hi = lo + rng.random(2000) * 0.01
    comp_lo = np.linspace(0.0, 0.9, 10)
    comp_hi = comp_lo + 0.05
    res_w = rng.random(1 << 9)
    return {
        "piece_index": (breaks, t),
        "piece_masses": (breaks, t, masses),
        "piece_masses_int": (breaks * den, tag_num.astype(float), mass_num),
        "step_oscillation": (breaks, values, lo, hi, comp_lo, comp_hi),
        "coset_contrast": (12, 3, 6, res_w),
    }


def _best(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return
    print(f"{'kernel':<18} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}  same")
    for name, call_args in _cases(np.random.default_rng(args.seed)).items():
        tp, rp = _best(getattr(_kernels_py, name), call_args, args.repeat)
        tc, rc = _best(getattr(_kernels, name), call_args, args.repeat)
        print(f"{name:<18} {tp * 1e3:>12.2f} {tc * 1e3:>12.2f} {tp / tc:>7.1f}x  {_same(rp, rc)}")


if __name__ == "__main__":
    main()
