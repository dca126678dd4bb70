"""Compare the compiled and pure-Python noncentral chi-square kernels.

Usage: python benchmarks/bench_kernels.py [--size N] [--repeat R]

Times the array density and CDF kernels of both backends on the same grid,
checks that they agree, then times a full optimal-risk evaluation under each
backend in a fresh interpreter (the backend is fixed at import time).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from blockdiscrim import _kernels_py

try:
    from blockdiscrim import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

RISK_SNIPPET = (
    "import time; from blockdiscrim.risk import PowerDistribution, Regime, optimal_risk;"
    "t = time.perf_counter();"
    "[optimal_risk(Regime(m, 2/9), PowerDistribution.point_mass(g)) for m in (1, 3, 6) for g in (0.5, 1.8, 5.0)];"
    "print(time.perf_counter() - t)"
)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def time_risk(pure):
    env = dict(os.environ)
    if pure:
        env["BLOCKDISCRIM_PURE_PYTHON"] = "1"
    else:
        env.pop("BLOCKDISCRIM_PURE_PYTHON", None)
    out = subprocess.run([sys.executable, "-c", RISK_SNIPPET], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    u = np.linspace(1e-3, 60.0, args.size)
    cases = [("logpdf", "ncx2_logpdf_array"), ("cdf", "ncx2_cdf_array")]
    backends = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])
    if _kernels_c is None:
        print("compiled extension not built; timing the pure-Python kernels only")

    print(f"{'kernel':<8}{'dof':>4}{'nc':>6}" + "".join(f"{k.NAME + ' [s]':>14}" for k in backends)
          + ("   speedup   max|diff|" if _kernels_c is not None else ""))
    for label, attr in cases:
        for dof, nc in [(3, 1.8), (6, 1.8), (3, 40.0)]:
            times = [best_of(lambda k=k: getattr(k, attr)(u, dof, nc), args.repeat) for k in backends]
            line = f"{label:<8}{dof:>4}{nc:>6}" + "".join(f"{t:>14.4f}" for t in times)
            if _kernels_c is not None:
                a = getattr(_kernels_py, attr)(u, dof, nc)
                b = getattr(_kernels_c, attr)(u, dof, nc)
                finite = np.isfinite(a)
                diff = float(np.max(np.abs(a[finite] - b[finite])))
                line += f"{times[0] / times[1]:>10.1f}x{diff:>12.1e}"
            print(line)

    print()
    print("optimal_risk over 9 grid points (fresh interpreter per backend)")
    print(f"  python: {time_risk(pure=True):.3f} s")
    if _kernels_c is not None:
        print(f"  cython: {time_risk(pure=False):.3f} s")


if __name__ == "__main__":
    main()
