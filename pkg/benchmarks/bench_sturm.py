"""Compiled versus pure-Python Sturm bisection on meridian-sized matrices.

Run:  python3 benchmarks/bench_sturm.py [--sizes 256,1024,4096] [--k 20] [--repeat 3]
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from gqp_lab.spectral import discretize_1d, flat_system
from gqp_lab.tridiag import available_backends, count_below, eigen_lowest


def _matrix(n):
    T = 8.0
    return discretize_1d(flat_system(lambda s: -1.0 / np.cosh(s) ** 2, -T, T), n)


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="256,1024,4096")
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'n':>6} {'task':>12} " + " ".join(f"{b:>12}" for b in backends) + "   speedup  max|diff|")
    for n in (int(x) for x in args.sizes.split(",")):
        A = _matrix(n + 1)
        for task, fn in (("count", lambda b: count_below(A, 0.0, b)),
                         (f"lowest {args.k}", lambda b: eigen_lowest(A, args.k, backend=b))):
            times, outs = [], []
            for b in backends:
                t, out = _best(lambda: fn(b), args.repeat)
                times.append(t)
                outs.append(np.atleast_1d(out))
            diff = max(float(np.max(np.abs(o - outs[0]))) for o in outs)
            speed = times[0] / times[-1] if len(times) > 1 and times[0] > 0 else math.nan
            print(f"{n:>6} {task:>12} " + " ".join(f"{t:12.6f}" for t in times)
                  + f"   {speed:7.1f}x  {diff:.1e}")


if __name__ == "__main__":
    main()
