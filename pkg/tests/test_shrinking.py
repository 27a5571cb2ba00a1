"""Tests for shrinking-target bookkeeping.

HitFamily reductions are compared against dense numpy arithmetic, the
pair-correlation and error-term diagnostics against hand-built coin
families where the answer is known, and the exponential-decay
certificate against its closed form.
"""

import math

import numpy as np
import pytest

from ulab.fields import GF
from ulab.diophantine import PsiSpec
from ulab.shrinking import (
    HitFamily,
    bc_verdict,
    cusp_hit_family,
    ed_check,
    error_term_check,
    flow_distance,
    independent_family,
    pair_correlation,
    tail_fit,
)


def make_bits(J, mu, rng):
    return rng.random((J, len(mu))) < mu[None, :]


def comonotone_bits(J, mu, rng):
    """One uniform draw per row reused at every time.  Hits at different
    times are then as correlated as they can be."""
    u = rng.random(J)
    return u[:, None] < mu[None, :]


# ---------------------------------------------------------------------------
# HitFamily reductions


def test_family_sums_match_dense_arrays():
    rng = np.random.default_rng(5)
    J, N = 40, 100
    mu = 1.0 / np.arange(1, N + 1)
    bits = make_bits(J, mu, rng)
    fam = HitFamily(bits=bits, mu=mu)
    assert fam.J == J and fam.N == N
    # windows are inclusive ranges of one-based times
    for a, b in [(1, 1), (1, N), (10, 30), (77, 99)]:
        want = bits[:, a - 1:b].sum(axis=1)
        assert np.array_equal(fam.window_sums(a, b), want)
    S, E = fam.sums_at([4, 8, N])
    for i, t in enumerate([4, 8, N]):
        assert np.array_equal(S[:, i], bits[:, :t].sum(axis=1))
        assert E[i] == pytest.approx(mu[:t].sum())
    assert np.allclose(fam.column_means(), bits.mean(axis=0))
    assert np.allclose(fam.measures(), mu)


def test_family_round_trips_through_packed_storage():
    rng = np.random.default_rng(6)
    mu = np.full(67, 0.3)
    bits = make_bits(23, mu, rng)
    fam = HitFamily(bits=bits, mu=mu)
    # total hit count survives the packing
    assert fam.window_sums(1, 67).sum() == bits.sum()


def test_independent_family_matches_direct_construction():
    mu = 1.0 / np.arange(1, 51)
    fam = independent_family(mu, 30, np.random.default_rng(9), mu_tail="divergent")
    assert fam.J == 30 and fam.N == 50
    assert fam.mu_tail == "divergent"
    assert fam.window_sums(1, 50).max() <= 50


# ---------------------------------------------------------------------------
# pair correlation


def test_pair_correlation_small_for_independent_rows():
    rng = np.random.default_rng(12)
    N = 2000
    mu = 1.0 / np.arange(1, N + 1)
    fam = HitFamily(bits=make_bits(150, mu, rng), mu=mu)
    assert pair_correlation(fam, 1, N).ratio < 1.0


def test_pair_correlation_flags_comonotone_rows():
    rng = np.random.default_rng(13)
    N = 2000
    mu = 1.0 / np.arange(1, N + 1)
    fam = HitFamily(bits=comonotone_bits(150, mu, rng), mu=mu)
    assert pair_correlation(fam, 1, N).ratio > 2.0


def test_pair_correlation_excess_for_duplicated_coin():
    # constant coin mu = 1/2 glued across times: the window count is
    # either 0 or its maximum, so the centered second moment is (w/2)^2
    rng = np.random.default_rng(14)
    N = 4096
    mu = np.full(N, 0.5)
    fam = HitFamily(bits=comonotone_bits(4000, mu, rng), mu=mu)
    pc = pair_correlation(fam, 1, N)
    assert pc.excess == pytest.approx((N / 2.0) ** 2, rel=0.05)


# ---------------------------------------------------------------------------
# divergence verdicts


def test_verdict_summable_measure_zero():
    mu = 0.5 ** np.arange(1, 40)
    fam = independent_family(mu, 200, np.random.default_rng(21), mu_tail="summable")
    rep = bc_verdict(fam)
    assert rep.verdict == "measure-zero"
    assert rep.frac_finite == 1.0


def test_verdict_divergent_full_measure():
    N = 4096
    mu = 1.0 / np.arange(1, N + 1)
    fam = independent_family(mu, 300, np.random.default_rng(22), mu_tail="divergent")
    rep = bc_verdict(fam)
    assert rep.verdict == "full-measure"
    assert rep.E_final == pytest.approx(mu.sum())
    assert rep.csv_lines()


def test_verdict_checkpoints_are_geometric():
    mu = np.full(512, 0.1)
    fam = independent_family(mu, 50, np.random.default_rng(23))
    rep = bc_verdict(fam)
    # each checkpoint records (time, median count, expected count, ratio)
    times = [cp[0] for cp in rep.checkpoints]
    assert times[0] == 4
    assert all(b == 2 * a for a, b in zip(times, times[1:]))
    assert times[-1] <= 512
    for t, med, expected, ratio in rep.checkpoints:
        assert expected == pytest.approx(0.1 * t)
        if expected > 0:
            assert ratio == pytest.approx(med / expected)


# ---------------------------------------------------------------------------
# error term


def test_error_term_square_root_for_independent_coin():
    grid = [256 * 2 ** k for k in range(7)]
    N = grid[-1]
    mu = np.full(N, 0.5)
    fam = HitFamily(bits=make_bits(400, mu, np.random.default_rng(31)), mu=mu)
    rep = error_term_check(fam, grid)
    assert rep.all_ok
    assert rep.frac_ok == 1.0
    assert abs(rep.exponent - 0.5) < 0.1


def test_error_term_rejects_comonotone_coin():
    grid = [256 * 2 ** k for k in range(7)]
    N = grid[-1]
    mu = np.full(N, 0.5)
    fam = HitFamily(bits=comonotone_bits(400, mu, np.random.default_rng(32)), mu=mu)
    rep = error_term_check(fam, grid)
    assert not rep.all_ok
    # glued rows make the error grow linearly with the expected sum
    assert rep.exponent > 0.9


# ---------------------------------------------------------------------------
# exponential-decay certificate


def test_ed_certificate_for_flow_distance():
    dist = flow_distance(GF(2), 1, 1)
    times = [float(t) for t in range(40)]
    betas = [0.1, 1.0, 10.0]
    rep = ed_check(times, dist, betas)
    assert rep.certified
    assert rep.growth_rate == pytest.approx(2.0)
    for beta, bound, partial in zip(rep.betas, rep.bounds, rep.partial_sups):
        x = math.exp(-beta * rep.growth_rate)
        assert bound == pytest.approx(1.0 + 2.0 * x / (1.0 - x))
        assert partial <= bound + 1e-9
    # the certified bound tightens as beta grows
    assert rep.bounds[0] > rep.bounds[1] > rep.bounds[2]


def test_ed_growth_rate_scales_with_block_shape():
    rep = ed_check([float(t) for t in range(30)], flow_distance(GF(3), 2, 1), [1.0])
    assert rep.certified
    assert rep.growth_rate == pytest.approx(4.0)


def test_ed_rejects_vanishing_distances():
    times = [float(t) for t in range(20)]
    rep = ed_check(times, lambda s, t: 0.0, [1.0])
    assert not rep.certified
    assert rep.growth_rate == 0.0


def test_ed_rejects_sublinear_log_distance():
    times = [float(t) for t in range(40)]

    def dist(s, t):
        return math.log(abs(s - t)) if s != t else 0.0

    assert not ed_check(times, dist, [1.0]).certified


def test_ed_validates_the_distance():
    times = [float(t) for t in range(10)]
    with pytest.raises(ValueError):
        ed_check(times, lambda s, t: float(s - t), [1.0])
    with pytest.raises(ValueError):
        ed_check(times, lambda s, t: float(abs(s - t) + (s < t)), [1.0])


# ---------------------------------------------------------------------------
# tail fitting


def test_tail_fit_recovers_exponential_rate():
    for kappa in [2 * math.log(2), 2 * math.log(3)]:
        z = np.random.default_rng(41).exponential(1.0 / kappa, 40000)
        fit = tail_fit(z)
        assert abs(fit.kappa - kappa) / kappa < 0.05
        lo, hi = fit.ci
        assert lo <= fit.kappa <= hi
        assert 0 < fit.C1 <= fit.C2


def test_tail_fit_bootstrap_is_seeded():
    z = np.random.default_rng(43).exponential(0.7, 5000)
    a = tail_fit(z, seed=7)
    b = tail_fit(z, seed=7)
    assert a.kappa == b.kappa and a.ci == b.ci


def test_tail_fit_needs_enough_samples():
    with pytest.raises(ValueError):
        tail_fit(np.random.default_rng(44).exponential(1.0, 10))


# ---------------------------------------------------------------------------
# orbit-built families


def test_critical_rate_hits_every_time():
    # r(t) = 0 at the critical rate and heights are nonnegative, so the
    # orbit family is all ones
    F = GF(2)
    fam = cusp_hit_family(F, PsiSpec.power(1), 1, 1, J=10, t_max=12, seed=3)
    assert np.array_equal(fam.window_sums(1, 12), np.full(10, 12))


def test_cusp_family_shape_and_determinism():
    F = GF(2)
    psi = PsiSpec.power(2)
    fam = cusp_hit_family(F, psi, 1, 1, J=20, t_max=15, seed=3)
    assert fam.J == 20 and fam.N == 15
    # the depth schedule starts at zero, so time 1 hits almost surely
    assert fam.column_means()[0] > 0.5
    again = cusp_hit_family(F, psi, 1, 1, J=20, t_max=15, seed=3, workers=2)
    assert np.array_equal(fam.window_sums(1, 15), again.window_sums(1, 15))
    diff = cusp_hit_family(F, psi, 1, 1, J=20, t_max=15, seed=4)
    assert not np.array_equal(fam.window_sums(1, 15), diff.window_sums(1, 15))
