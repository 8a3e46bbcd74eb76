#!/usr/bin/env python3
"""Benchmark the quadrature gradient's pair-difference core: compiled
extension vs pure-Python fallback.

Swaps each implementation into the hot path of
``nl_gradient(backend="quadrature")``, times the full call, and checks
that both produce the same numbers.  Run from the repository root:

    python3 benchmarks/bench_quadrature.py --repeats 5
"""

import argparse
import time

import numpy as np

import nlap.fields.gradient as gradient_module
from nlap.fields import COMPILED, Field, Interval, Rect, build_grid, \
    nl_gradient
from nlap.fields import _pairsum_py
from nlap.fields._select import pairsum as selected
from nlap.kernels import make_kernel, normalize, rescale


def build_cases():
    base1 = normalize(make_kernel("truncated-power", 1, s=0.5,
                                  cutoff="hard"))
    base2 = normalize(make_kernel("truncated-power", 2, s=0.5,
                                  cutoff="hard"))
    cases = []

    delta, h = 0.2, 1 / 512
    grid = build_grid(Interval(-1.0, 1.0), h, delta)
    x = grid.axes()[0]
    field = Field(grid, np.exp(-8.0 * x ** 2) * np.cos(3.0 * x))
    cases.append((f"1d  n={grid.shape[0]:5d}  delta={delta}",
                  field, rescale(base1, delta, mode="vanishing")))

    for delta, h in ((0.15, 1 / 64), (0.4, 1 / 96)):
        grid = build_grid(Rect((0.0, 0.0), (1.0, 1.0)), h, delta)
        pts = grid.points()
        rsq = (pts[..., 0] - 0.5) ** 2 + (pts[..., 1] - 0.5) ** 2
        field = Field(grid, np.exp(-12.0 * rsq))
        cases.append((f"2d  n={grid.shape[0] * grid.shape[1]:5d}  "
                      f"delta={delta}",
                      field, rescale(base2, delta, mode="vanishing")))
    return cases


def time_with(impl, field, kernel, repeats):
    gradient_module.pairsum = impl
    try:
        result = nl_gradient(field, kernel, backend="quadrature")
        best = float("inf")
        for _ in range(repeats):
            start = time.perf_counter()
            nl_gradient(field, kernel, backend="quadrature")
            best = min(best, time.perf_counter() - start)
    finally:
        gradient_module.pairsum = selected
    return best, result.values


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repetitions per case (best is kept)")
    args = parser.parse_args()

    impls = [("python", _pairsum_py)]
    if COMPILED:
        from nlap.fields import _pairsum
        impls.append(("compiled", _pairsum))
    else:
        print("compiled extension not available; timing the fallback only")

    header = f"{'case':30s}" + "".join(f"{name:>12s}" for name, _ in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10s}{'max diff':>12s}"
    print(header)
    for name, field, kernel in build_cases():
        times, values = [], []
        for _, impl in impls:
            best, vals = time_with(impl, field, kernel, args.repeats)
            times.append(best)
            values.append(vals)
        line = f"{name:30s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(impls) == 2:
            diff = float(np.abs(values[0] - values[1]).max())
            line += f"{times[0] / times[1]:9.1f}x{diff:12.2e}"
        print(line)


if __name__ == "__main__":
    main()
