"""Timing table for the hot kernels: bound entry points vs pure Python.

With numba available the bound entry points are jitted and the table
shows the speedup; under ULAB_NUMBA=0 both columns time the same
fallback and the ratio sits near 1.  Workloads mirror the shapes the
experiments actually produce.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--q Q]
"""

import argparse
import time

import numpy as np

from ulab import kernels
from ulab.backend import USING_NUMBA
from ulab.diophantine import PsiSpec, _solution_thresholds
from ulab.fields import GF
from ulab.lattices import PolyLattice
from ulab.laurent import Laurent
from ulab.poly import FqPoly


def timed(fn, repeat):
    # one untimed call first so jit compilation never lands in the table
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(F, rng):
    mul_t, add_t = F.mul_table, F.add_table
    neg_t, inv_t = F.neg_table, F.inv_table
    q = F.q

    a = rng.integers(0, q, size=256).astype(np.int64)
    b = rng.integers(0, q, size=256).astype(np.int64)
    b[-1] = 1
    yield "poly_mul", lambda impl: impl(a, b, mul_t, add_t)

    num = rng.integers(0, q, size=384).astype(np.int64)
    den = rng.integers(0, q, size=128).astype(np.int64)
    den[-1] = 1
    yield "poly_divmod", lambda impl: impl(
        num.copy(), den, mul_t, add_t, neg_t, inv_t)

    u = rng.integers(0, q, size=64).astype(np.int64)
    u[0] = 1
    yield "series_inv_unit", lambda impl: impl(
        u, 512, mul_t, add_t, neg_t, inv_t)

    batch = rng.integers(0, q, size=(200, 64)).astype(np.int64)

    def run_hist(impl):
        hist = np.zeros(9, dtype=np.int64)
        impl(batch, 8, hist, mul_t, add_t, neg_t, inv_t)
    yield "cf_degree_hist", run_hist

    rows = [[FqPoly(F, rng.integers(0, q, size=7)) for _ in range(3)]
            for _ in range(3)]
    lat = PolyLattice(F, rows)
    C, s, err = lat._pack()

    def run_popov(impl):
        impl(C.copy(), np.zeros(3, dtype=np.int64), err.copy(),
             mul_t, add_t, neg_t, inv_t)
    yield "weak_popov", run_popov

    #q^(D+1) odometer states: keep the pure Python column affordable
    D, cap = 9, 26
    alpha = Laurent.random_unit_ball(F, rng, precision=cap + D + 8)
    thr = _solution_thresholds(PsiSpec.power(1), q, 1, 1, D, cap)
    afrac = np.zeros(cap + D + 2, dtype=np.int64)
    afrac[1:] = alpha.tail_codes(cap + D + 1)

    def run_scan(impl):
        hist = np.zeros((D + 1, cap + 2), dtype=np.int64)
        counts = np.zeros(D + 1, dtype=np.int64)
        impl(afrac, D, cap, thr, 1,
             np.zeros((1, D + 1), dtype=np.int64),
             np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64),
             hist, counts, mul_t, add_t, neg_t)
    yield "dioph_scan", run_scan

    M = rng.integers(0, q, size=(24, 32)).astype(np.int64)

    def run_gauss(impl):
        impl(M.copy(), mul_t, add_t, neg_t, inv_t)
    yield "gauss_kernel_vector", run_gauss


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--q", type=int, default=3)
    args = ap.parse_args()

    F = GF(args.q)
    rng = np.random.default_rng(1)
    print(f"backend: {'numba' if USING_NUMBA else 'pure python'}, "
          f"q = {args.q}, best of {args.repeat}")
    print(f"{'kernel':<22}{'bound':>12}{'python':>12}{'speedup':>10}")
    for name, call in workloads(F, rng):
        bound = getattr(kernels, name)
        fallback = kernels.PY_IMPLS[name]
        t_bound = timed(lambda: call(bound), args.repeat)
        t_py = timed(lambda: call(fallback), args.repeat)
        print(f"{name:<22}{t_bound * 1e3:>10.3f}ms{t_py * 1e3:>10.3f}ms"
              f"{t_py / t_bound:>9.1f}x")


if __name__ == "__main__":
    main()
