"""Compiled kernels versus the numpy fallback.

    python benchmarks/bench_kernels.py [--samples N] [--order K] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from gausscorr import _fallback

try:
    from gausscorr import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(n, order):
    rng = np.random.default_rng(0)
    t = rng.standard_normal(n)
    y = t + 0.2 * t**3
    c = rng.standard_normal(order + 1)
    a, b = rng.standard_normal(order + 1), rng.standard_normal(order + 1)
    return {
        f"hermite_moments n={n} N={order}": lambda m: m.hermite_moments(y, t, order),
        f"hermite_table n={n // 10} N={order}": lambda m: m.hermite_table(t[: n // 10], order),
        f"hermite_series n={n} N={order}": lambda m: m.hermite_series(c, t),
        f"lagrange_slack N={order}": lambda m: m.lagrange_slack(a, b),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--order", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("numpy", _fallback)] + ([("cython", _kernels)] if _kernels else [])
    print(f"{'kernel':<36}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for label, fn in cases(args.samples, args.order).items():
        times = []
        for _, mod in backends:
            fn(mod)  # warm up
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        speed = f"{times[0] / times[1]:>9.1f}x" if len(times) > 1 else ""
        print(f"{label:<36}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times) + speed)
    if _kernels is None:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
