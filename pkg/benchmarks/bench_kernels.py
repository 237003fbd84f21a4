"""Timing table for the hot kernels: numba loops vs pure-numpy slicing.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 64,256,1024] [--repeats 7]

Also times one full continuation solve per flavour by swapping the kernel
dispatch in place, which is what SPLITVAR_NUMBA=0 does at import time.
"""

import argparse
import time

import numpy as np

from splitvar import Grid, GridFunction, SolveConfig, continuation, make_pair
from splitvar import _kernels as K
from splitvar.densities import make_phi_nu, power_density2

DISPATCH = ("cell_gradient", "scatter_adjoint", "scatter_diag", "hessvec")


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(n, rng):
    v = rng.standard_normal((n + 1, n + 1))
    t1 = rng.standard_normal((n, n))
    t2 = rng.standard_normal((n, n))
    w1 = t1 * t1
    w2 = t2 * t2
    h = 2.0 / n
    return {
        "cell_gradient": (v, h, h),
        "scatter_adjoint": (t1, t2, h, h),
        "scatter_diag": (w1, w2, h, h),
        "hessvec": (v, w1, w2, h, h),
    }


def flavour_fn(name, flavour):
    return getattr(K, f"_{flavour}_{name}")


def swap_dispatch(flavour):
    for name in DISPATCH:
        setattr(K, name, flavour_fn(name, flavour))


def time_solve(n, repeats):
    pair = make_pair(make_phi_nu(1.5), power_density2(2.0))
    grid = Grid(n, n)
    u0 = GridFunction.from_callable(
        grid, lambda x1, x2: np.tanh(3.0 * x1) + 0.2 * x2
    )
    cfg = SolveConfig(
        grid=grid, densities=pair, u0=u0, delta_schedule=[1e-1, 1e-2, 1e-3]
    )
    return best_of(lambda: continuation(cfg), repeats)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="64,256,1024")
    ap.add_argument("--solve-size", type=int, default=128)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()
    sizes = [int(tok) for tok in args.sizes.split(",")]

    flavours = ["numpy"] + (["numba"] if K._NUMBA_IMPORTED else [])
    if len(flavours) == 1:
        print("numba not importable; timing the numpy path only")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>6}" + "".join(f"{fl + ' ms':>12}" for fl in flavours)
          + ("{:>10}".format("speedup") if len(flavours) == 2 else ""))
    for n in sizes:
        cases = kernel_cases(n, rng)
        for name, argtuple in cases.items():
            row = [f"{name:<16}{n:>6}"]
            ms = {}
            for fl in flavours:
                fn = flavour_fn(name, fl)
                fn(*argtuple)  # warm-up: first numba call pays the JIT
                ms[fl] = best_of(lambda: fn(*argtuple), args.repeats) * 1e3
                row.append(f"{ms[fl]:>12.3f}")
            if len(flavours) == 2:
                row.append(f"{ms['numpy'] / ms['numba']:>10.2f}x")
            print("".join(row))

    saved = {name: getattr(K, name) for name in DISPATCH}
    try:
        print()
        line = f"{'continuation':<16}{args.solve_size:>6}"
        ms = {}
        for fl in flavours:
            swap_dispatch(fl)
            time_solve(args.solve_size, 1)  # warm-up
            ms[fl] = time_solve(args.solve_size, max(2, args.repeats // 2)) * 1e3
            line += f"{ms[fl]:>12.1f}"
        if len(flavours) == 2:
            line += f"{ms['numpy'] / ms['numba']:>10.2f}x"
        print(line)
    finally:
        for name, fn in saved.items():
            setattr(K, name, fn)


if __name__ == "__main__":
    main()
