"""Tests for the approximation-to-excursion dictionary.

The depth schedule r(t) is pinned against a brute-force maximizer and
against its closed form for power rates.  The solution scan is checked
two ways: the compiled one-dimensional kernel against the generic
Python walk, and both against a from-scratch enumeration written here.
"""

import numpy as np
import pytest
from fractions import Fraction

from ulab.fields import GF
from ulab.laurent import Laurent
from ulab.poly import FqPoly
from ulab.diophantine import (
    ApproximationLattice,
    PsiSpec,
    brute_force_solutions,
    consistency_check,
    excursion_trace,
    kg_experiment,
    series_test,
    solve_rt,
)


def brute_rt(psi, q, m, n, t):
    """Largest r >= 0 with psi(q^(n(mt-r))) <= q^(-m(nt+r)), by scan."""
    best = None
    for r in range(0, 2 * m * t + 5):
        try:
            ok = psi.le_power_q(q, n * (m * t - r), Fraction(-m * (n * t + r)))
        except ValueError:
            break
        if ok:
            best = r
    if best is None:
        raise ValueError("no admissible depth")
    return best


# ---------------------------------------------------------------------------
# solve_rt


def test_rt_critical_rate_is_flat_zero():
    psi = PsiSpec.power(1)
    for (m, n) in [(1, 1), (1, 2), (2, 1), (2, 2)]:
        for t in range(0, 13):
            assert solve_rt(psi, 2, m, n, t) == 0
            assert solve_rt(psi, 3, m, n, t) == 0


def test_rt_cubic_rate_half_speed():
    psi = PsiSpec.power(3)
    for t in range(0, 16):
        assert solve_rt(psi, 2, 1, 1, t) == t // 2


def test_rt_matches_closed_form_for_power_rates():
    # for psi(x) = x^(-tau) the inequality linearizes and
    # r(t) = floor(mnt(tau-1) / (m + tau n))
    for tau in [1, Fraction(3, 2), 2, 3]:
        psi = PsiSpec.power(tau)
        for (m, n) in [(1, 1), (1, 2), (2, 1), (2, 2)]:
            for t in range(0, 16):
                want = int(Fraction(m * n * t * (tau - 1), m + tau * n))
                assert solve_rt(psi, 2, m, n, t) == want


def test_rt_agrees_with_brute_maximizer():
    rates = [
        PsiSpec.power(1),
        PsiSpec.power(Fraction(3, 2)),
        PsiSpec.power(2),
        PsiSpec.power(3),
        PsiSpec.power_log(2, 1),
    ]
    for psi in rates:
        for (m, n) in [(1, 1), (1, 2), (2, 1)]:
            for t in range(0, 11):
                try:
                    want = brute_rt(psi, 2, m, n, t)
                except ValueError:
                    # a rate undefined at this time must raise on both sides
                    with pytest.raises(ValueError):
                        solve_rt(psi, 2, m, n, t)
                    continue
                assert solve_rt(psi, 2, m, n, t) == want


def test_rt_nondecreasing_in_time():
    psi = PsiSpec.power(2)
    for (m, n) in [(1, 1), (2, 3)]:
        vals = [solve_rt(psi, 3, m, n, t) for t in range(25)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_rt_undefined_below_critical_rate():
    with pytest.raises(ValueError):
        solve_rt(PsiSpec.power(Fraction(1, 2)), 2, 1, 1, 6)


# ---------------------------------------------------------------------------
# series_test


def test_series_verdicts_power_rates():
    for tau, want in [
        (Fraction(1, 2), "divergent"),
        (Fraction(2, 3), "divergent"),
        (1, "divergent"),
        (Fraction(3, 2), "convergent"),
        (2, "convergent"),
        (3, "convergent"),
    ]:
        rep = series_test(PsiSpec.power(tau), 2, 1, 1)
        assert rep.verdict_psi == want
        rep2 = series_test(PsiSpec.power(tau), 3, 2, 1)
        assert rep2.verdict_psi == want


def test_series_rt_and_psi_sides_agree():
    rates = [
        PsiSpec.power(1),
        PsiSpec.power(2),
        PsiSpec.power(Fraction(5, 4)),
        PsiSpec.power_log(1, 2),
        PsiSpec.power_log(1, 1),
    ]
    for psi in rates:
        for (m, n) in [(1, 1), (1, 2), (2, 1)]:
            rep = series_test(psi, 2, m, n)
            assert rep.verdict_rt == rep.verdict_psi


def test_series_logarithmic_boundary():
    # at the critical power, a log factor decides: sum j^(-c)
    assert series_test(PsiSpec.power_log(1, 2), 2, 1, 1).verdict_psi == "convergent"
    assert series_test(PsiSpec.power_log(1, 1), 2, 1, 1).verdict_psi == "divergent"


# ---------------------------------------------------------------------------
# solution scans


def reference_scan(alpha, psi, D):
    """Independent enumeration for m = n = 1, written from the definition:
    q ranges over nonzero polynomials of degree <= D, p is the polynomial
    part of q*alpha, and (q, p) solves when |q*alpha - p| < psi(|q|)."""
    field = alpha.field
    counts = [0] * (D + 1)
    cap = 2 * D + 8
    for code in range(1, field.q ** (D + 1)):
        coeffs = []
        c = code
        while c:
            coeffs.append(c % field.q)
            c //= field.q
        q = FqPoly(field, coeffs)
        resid = (Laurent.from_poly(q) * alpha).frac_part()
        if resid.is_zero():
            v = cap + 1
        else:
            v = -resid.norm().e
        if not psi.le_power_q(field.q, q.deg, Fraction(-v)):
            counts[q.deg] += 1
    return counts


@pytest.mark.parametrize("qsize", [2, 3])
def test_scan_matches_reference_enumeration(qsize):
    F = GF(qsize)
    rng = np.random.default_rng(100 + qsize)
    for psi in [PsiSpec.power(1), PsiSpec.power(2)]:
        for _ in range(4):
            alpha = Laurent.random_unit_ball(F, rng, precision=64)
            got = brute_force_solutions(alpha, psi, 4)
            assert list(got.counts_by_degree) == reference_scan(alpha, psi, 4)


def test_kernel_and_python_scans_agree():
    # a single series can be fed either as a Laurent (compiled odometer)
    # or as a 1x1 block (generic walk); both must report the same sets
    for qsize, seed in [(2, 7), (3, 8)]:
        F = GF(qsize)
        rng = np.random.default_rng(seed)
        for psi in [PsiSpec.power(1), PsiSpec.power(2)]:
            for _ in range(3):
                alpha = Laurent.random_unit_ball(F, rng, precision=64)
                a = brute_force_solutions(alpha, psi, 8)
                b = brute_force_solutions([[alpha]], psi, 8, m=1, n=1)
                assert list(a.counts_by_degree) == list(b.counts_by_degree)
                key = lambda s: (s.degree, s.quality, tuple(str(p) for p in s.qvec))
                assert sorted(map(key, a.solutions)) == sorted(map(key, b.solutions))


def test_solution_records_are_verifiable():
    F = GF(2)
    rng = np.random.default_rng(41)
    alpha = Laurent.random_unit_ball(F, rng, precision=64)
    psi = PsiSpec.power(1)
    found = brute_force_solutions(alpha, psi, 8)
    assert found.count_in_degree_range(0, 8) == sum(found.counts_by_degree[1:])
    for sol in found.solutions:
        q, p = sol.qvec[0], sol.pvec[0]
        resid = Laurent.from_poly(q) * alpha - Laurent.from_poly(p)
        if sol.quality_exact:
            assert resid.norm().e == -sol.quality
        assert max(q.deg, 0) == sol.degree


def test_degree_range_counts_use_half_open_window():
    F = GF(2)
    rng = np.random.default_rng(42)
    alpha = Laurent.random_unit_ball(F, rng, precision=64)
    found = brute_force_solutions(alpha, PsiSpec.power(1), 6)
    for lo in range(-1, 6):
        for hi in range(lo, 7):
            want = sum(found.counts_by_degree[lo + 1:hi + 1])
            assert found.count_in_degree_range(lo, hi) == want


# ---------------------------------------------------------------------------
# excursion dictionary


def test_consistency_check_no_violations_on_random_targets():
    for qsize, seed in [(2, 9), (3, 10)]:
        F = GF(qsize)
        rng = np.random.default_rng(seed)
        for psi in [PsiSpec.power(2), PsiSpec.power(3)]:
            fwd = bwd = 0
            for _ in range(10):
                alpha = Laurent.random_unit_ball(F, rng, precision=96)
                rep = consistency_check(alpha, psi, 12)
                assert rep.ok
                assert rep.violations == []
                fwd += rep.forward_checked
                bwd += rep.backward_checked
            # any single target may have nothing to check, but ten
            # random ones must produce events on both sides
            assert fwd > 0
            assert bwd > 0


def test_excursion_trace_record_structure():
    F = GF(2)
    rng = np.random.default_rng(17)
    psi = PsiSpec.power(3)
    for _ in range(5):
        alpha = Laurent.random_unit_ball(F, rng, precision=120)
        lat = ApproximationLattice(F, alpha, 1, 1)
        tr = excursion_trace(lat, psi, 20)
        assert [rec[0] for rec in tr.records] == list(range(1, 21))
        for t, r, height, hit in tr.records:
            assert r == solve_rt(psi, 2, 1, 1, t)
            assert height >= 0
            assert hit == (height >= r)
        # the one-dimensional flow moves the lattice one step at a time
        hs = [rec[2] for rec in tr.records]
        assert all(abs(a - b) <= 1 for a, b in zip(hs, hs[1:]))
        assert tr.heights() == hs
        assert tr.max_height() == max(hs)
        assert tr.hit_count() == sum(1 for rec in tr.records if rec[3])
        assert tr.hits() == [rec[0] for rec in tr.records if rec[3]]


def test_excursion_trace_is_deterministic():
    F = GF(3)
    rng = np.random.default_rng(23)
    alpha = Laurent.random_unit_ball(F, rng, precision=120)
    lat = ApproximationLattice(F, alpha, 1, 1)
    a = excursion_trace(lat, PsiSpec.power(2), 15)
    b = excursion_trace(ApproximationLattice(F, alpha, 1, 1), PsiSpec.power(2), 15)
    assert a.records == b.records


# ---------------------------------------------------------------------------
# sampling experiment


def test_kg_experiment_separates_rates():
    F = GF(2)
    fast = kg_experiment(F, PsiSpec.power(1), 1, 1, 60, 12, seed=3)
    slow = kg_experiment(F, PsiSpec.power(3), 1, 1, 60, 12, seed=3)
    assert fast.verdict == "divergent"
    assert slow.verdict == "convergent"
    assert fast.frac_with_solution >= 0.8
    assert slow.frac_with_solution <= 0.3


def test_kg_experiment_worker_count_does_not_change_results():
    F = GF(2)
    one = kg_experiment(F, PsiSpec.power(1), 1, 1, 30, 10, seed=6, workers=1)
    par = kg_experiment(F, PsiSpec.power(1), 1, 1, 30, 10, seed=6, workers=3)
    assert one.frac_with_solution == par.frac_with_solution
    assert one.csv_lines() == par.csv_lines()


# ---------------------------------------------------------------------------
# rate declarations


def test_table_rate_must_be_non_increasing():
    with pytest.raises(ValueError):
        PsiSpec.from_table({1: Fraction(-1), 2: Fraction(0)})


def test_table_rate_domain_is_explicit():
    t = PsiSpec.from_table({0: Fraction(0), 1: Fraction(-2), 2: Fraction(-4)})
    assert t.log_value(1) == -2
    with pytest.raises(ValueError):
        t.log_value(5)


def test_power_rate_exact_comparisons():
    psi = PsiSpec.power(2)
    assert psi.log_value(5) == -10
    assert psi.le_power_q(2, 3, -6)
    assert not psi.le_power_q(2, 3, -7)
    half = PsiSpec.power(Fraction(3, 2))
    assert half.log_value(3) == Fraction(-9, 2)
    assert half.le_power_q(2, 3, Fraction(-9, 2))
    assert not half.le_power_q(2, 3, Fraction(-19, 4))


def test_powerlog_rate_exact_boundary():
    # psi(q^j) = q^(-j) / j^c; at q = 2, j = 4, c = 2 the value is 2^(-8)
    pl = PsiSpec.power_log(1, 2)
    assert pl.le_power_q(2, 4, -8)
    assert not pl.le_power_q(2, 4, Fraction(-33, 4))


def test_scaled_rate_shifts_log_values():
    base = PsiSpec.power(2)
    assert base.scaled(-3).log_value(5) == base.log_value(5) - 3
    assert base.scaled(-3).le_power_q(2, 5, -13)
    assert not base.scaled(-3).le_power_q(2, 5, -14)
