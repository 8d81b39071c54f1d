"""
Compare the compiled and NumPy kernels for K_nu and the extension profile.

    python benchmarks/bench_kernels.py --sizes 1000 100000 --repeat 5
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from fracneumann import _kernels_py

try:
    from fracneumann import _kernels as _compiled
except ImportError:
    _compiled = None


def _bench(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 100_000])
    ap.add_argument("--orders", type=float, nargs="+", default=[0.25, 0.75])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _compiled is None:
        print("compiled extension not built; only the NumPy kernels are available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20}{'s':>6}{'n':>10}{'numpy [ms]':>14}{'cython [ms]':>14}{'speedup':>10}{'max diff':>12}")
    for n in args.sizes:
        # mix of series (t <= 1) and continued-fraction (t > 1) arguments, as in an extension sweep
        t = np.sort(rng.uniform(1e-6, 40.0, n))
        for s in args.orders:
            for name, fn in (("rho_and_derivative", "rho_and_derivative"), ("besselk", "besselk")):
                py = getattr(_kernels_py, fn)
                t_py = _bench(lambda: py(s, t), args.repeat)
                ref = py(s, t)
                if _compiled is None:
                    print(f"{name:<20}{s:>6}{n:>10}{1e3 * t_py:>14.3f}{'-':>14}{'-':>10}{'-':>12}")
                    continue
                cy = getattr(_compiled, fn)
                t_cy = _bench(lambda: cy(s, t), args.repeat)
                got = cy(s, t)
                ref, got = (ref[0], got[0]) if isinstance(ref, tuple) else (ref, got)
                diff = float(np.max(np.abs(ref - got)))
                print(f"{name:<20}{s:>6}{n:>10}{1e3 * t_py:>14.3f}{1e3 * t_cy:>14.3f}{t_py / t_cy:>10.1f}{diff:>12.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
