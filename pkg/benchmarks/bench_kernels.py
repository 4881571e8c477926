"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N time for each backend, the
speed-up and the max abs difference between the two results.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from mar_kit import _kernels_py

try:
    from mar_kit import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    m, n, T = 3, 2, 2000
    A = rng.standard_normal((m, m)) * 0.3
    B = rng.standard_normal((n, n)) * 0.3
    E = rng.standard_normal((T + 500, m, n))
    Phi = np.kron(B, A)
    e = rng.standard_normal((T + 500, m * n))
    Y = rng.standard_normal((T, m, n))
    Z = rng.standard_normal((T, m, n))
    K = rng.standard_normal((n, n))
    return {
        "bilinear_recursion 3x2 T=2000": ("bilinear_recursion", (A, B, E, 500)),
        "var_recursion d=6 T=2000": ("var_recursion", (Phi, e, 500)),
        "cross_sum 3x2 T=2000": ("cross_sum", (Y, Z, K)),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'python ms':>10s} {'cython ms':>10s} {'speed-up':>9s} {'max diff':>9s}")
    for label, (name, arglist) in cases(rng).items():
        py = getattr(_kernels_py, name)
        t_py = min(timeit.repeat(lambda: py(*arglist), repeat=args.repeat, number=args.number)) / args.number
        if _kernels is None:
            print(f"{label:32s} {t_py * 1e3:10.3f} {'-':>10s} {'-':>9s} {'-':>9s}")
            continue
        cy = getattr(_kernels, name)
        t_cy = min(timeit.repeat(lambda: cy(*arglist), repeat=args.repeat, number=args.number)) / args.number
        diff = np.abs(np.asarray(py(*arglist)) - np.asarray(cy(*arglist))).max()
        print(f"{label:32s} {t_py * 1e3:10.3f} {t_cy * 1e3:10.3f} {t_py / t_cy:8.1f}x {diff:9.1e}")


if __name__ == "__main__":
    main()
