"""Compare the numba and numpy paths of the hot kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--nk 1024] [--steps 200]

Reports the best wall time per kernel and backend, and the largest
difference between the two backends' results.
"""

import argparse
import time

import numpy as np

from hslab import _kernels, scattering
from hslab.field import SpatialGrid, build_profile


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_jost(nk, repeat):
    prof = build_profile({"kind": "gaussian", "A": 0.1, "sigma": 1.0, "x0": 0.0}, SpatialGrid(12.0, 2048))
    ks = scattering.default_k_grid(nk)
    res = {}
    for backend in ("numba", "numpy"):
        _kernels.set_backend(backend)
        scattering.scattering_table(prof, scattering.default_k_grid(4))  # compile / warm up
        res[backend] = _best(lambda: scattering.scattering_table(prof, ks).a, repeat)
    return res


def bench_rhs(steps, repeat, n=4096):
    x = np.linspace(-132.0, 132.0, n)
    m = 0.1 * (2.0 - 4.0 * x**2) * np.exp(-x**2)
    h = x[1] - x[0]
    res = {}
    for backend in ("numba", "numpy"):
        _kernels.set_backend(backend)
        _kernels.hs_rhs(m, h)

        def run():
            r = None
            for _ in range(steps):
                r = _kernels.hs_rhs(m, h)[0]
            return r

        res[backend] = _best(run, repeat)
    return res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--nk", type=int, default=1024)
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    initial = _kernels.BACKEND
    try:
        rows = [
            (f"jost sweep, {args.nk} k", bench_jost(args.nk, args.repeat)),
            (f"hs_rhs x {args.steps}, N=4096", bench_rhs(args.steps, args.repeat)),
        ]
    finally:
        _kernels.set_backend(initial)
    print(f"{'kernel':32s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, res in rows:
        tn, on = res["numba"]
        tp, op = res["numpy"]
        diff = float(np.max(np.abs(on - op)))
        print(f"{name:32s} {tn:10.4f} {tp:10.4f} {tp / tn:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
