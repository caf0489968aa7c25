"""Time the compiled kernels against their numpy twins.

Usage::

    python3 benchmarks/bench_kernels.py [--T 4096] [--repeat 5]

Each kernel runs on identical inputs under both backends. The script
prints the best wall time per backend, the speed-up and the largest
absolute difference between the two outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lsbts.kernels import get_backend


def _best(fn, args, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _maxdiff(a, b):
    if isinstance(a, tuple):
        return max(_maxdiff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def cases(T, rng):
    u = np.arange(1, T + 1) / T
    x = rng.standard_normal(T)
    pacf = np.ascontiguousarray(np.column_stack([0.6 * np.cos(np.pi * u), -0.3 + 0.2 * u]))
    log_sigma = 0.1 * u
    delta = 0.1 + 0.25 * u
    d = min(T - 1, 64)
    lags = np.arange(d + 1)
    acvf = np.ascontiguousarray((0.5 + 0.3 * u)[:, None] ** lags[None, :] / (1 - (0.5 + 0.3 * u)[:, None] ** 2))
    e = rng.standard_normal(T)
    v = 1.0 + rng.random(T)
    return {
        "ar_nll_sum": (x, pacf, log_sigma),
        "ar_simulate": (x, pacf, np.exp(log_sigma)),
        "fd_nll_sum": (x, delta, log_sigma, d),
        "ld_innovations": (x, acvf, d),
        "nll_sum": (e, v),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=4096, help="series length")
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats (best is kept)")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    py = get_backend("python")
    try:
        cy = get_backend("cython")
    except ImportError:
        print("compiled extension not built; only the numpy backend is available")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"T = {args.T}, best of {args.repeat}")
    print(f"{'kernel':<16}{'cython [s]':>12}{'python [s]':>12}{'speed-up':>10}{'max |diff|':>12}")
    for name, a in cases(args.T, rng).items():
        tc, oc = _best(getattr(cy, name), a, args.repeat)
        tp, op = _best(getattr(py, name), a, args.repeat)
        print(f"{name:<16}{tc:>12.2e}{tp:>12.2e}{tp / tc:>10.1f}{_maxdiff(oc, op):>12.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
