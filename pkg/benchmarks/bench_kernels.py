"""Timing of the compiled kernels against the pure Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Each kernel is run on
both backends with identical inputs; the table reports the best of
``--repeat`` runs and the maximum difference between the two outputs.
"""
import argparse
import math
import time

import numpy as np

from wkbflow import kernels
from wkbflow.polynomial import ComplexPolynomial, cached_turning_points


def _best(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng):
    Q = ComplexPolynomial([0, 1j, 1 + 1j, 1])          # x (x + 1) (x + i)
    tps = cached_turning_points(Q)
    roots = [t.location for t in tps]
    mults = [t.multiplicity for t in tps]
    x = rng.normal(size=20000) + 1j * rng.normal(size=20000)
    a = np.exp(-rng.uniform(0, 1, 50000)) * np.exp(1j * rng.uniform(0, 1, 50000))
    b = rng.normal(size=50000) + 1j * rng.normal(size=50000)
    y0 = 2.0 + 1.0j
    return {
        "horner (20k points)": lambda m: m.horner(Q.coefficients, x),
        "align_sqrt_sequence (20k)": lambda m: m.align_sqrt_sequence(Q.coefficients[0] + x * 0 + x, 1.0),
        "linear_recurrence (50k)": lambda m: m.linear_recurrence(a, b, 0.0),
        "flow_integrate (t = 200)": lambda m: m.flow_integrate(
            Q.coefficients, roots, mults, y0, np.sqrt(Q(y0)), -1.0, 200.0, 1e-11, 0.01)[1],
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    backends = kernels.backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the python backend is available")
    rng = np.random.default_rng(7)
    print(f"{'kernel':28s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases(rng).items():
        tp, op = _best(lambda: fn(backends["python"]), args.repeat)
        if "cython" in backends:
            tc, oc = _best(lambda: fn(backends["cython"]), args.repeat)
            n = min(len(op), len(oc))
            diff = float(np.max(np.abs(np.asarray(op)[:n] - np.asarray(oc)[:n])))
            print(f"{name:28s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {diff:10.2e}")
        else:
            print(f"{name:28s} {tp:11.4f} {'-':>11s} {'-':>8s} {'-':>10s}")


if __name__ == "__main__":
    main()
