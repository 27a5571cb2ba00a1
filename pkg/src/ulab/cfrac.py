"""Continued fractions of Laurent series at infinity.

The expansion of alpha is alpha = a_0 + 1/(a_1 + 1/(a_2 + ...)) with
polynomial digits; every digit past the zeroth has degree at least one.
Working on certified series windows makes the stopping rule automatic: a
digit of degree d costs exactly 2d coefficients of precision, and the
expansion stops either when the remainder is exactly zero (rational
input, ``terminated``) or when the next digit can no longer be certified
from the window that is left.

Convergents satisfy p_i = a_i p_{i-1} + p_{i-2} and likewise for q_i,
with (p_{-1}, q_{-1}) = (1, 0) and (p_0, q_0) = (a_0, 1).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy import stats as _scipy_stats

from . import kernels
from .errors import PrecisionError
from .fields import Fq, GF
from .laurent import Laurent, LogNorm
from .poly import FqPoly


class CFExpansion:
    """Digits and convergents of one continued fraction expansion."""

    def __init__(self, field: Fq, digits, terminated: bool):
        self.field = field
        self.digits = list(digits)
        self.terminated = terminated
        self.p = []
        self.q = []
        p_prev, q_prev = FqPoly.one(field), FqPoly.zero(field)
        p_curr, q_curr = None, None
        for i, a in enumerate(self.digits):
            if i == 0:
                p_curr, q_curr = a, FqPoly.one(field)
            else:
                p_curr, p_prev = a * p_curr + p_prev, p_curr
                q_curr, q_prev = a * q_curr + q_prev, q_curr
            self.p.append(p_curr)
            self.q.append(q_curr)

    def __len__(self):
        return len(self.digits)

    def convergent(self, i: int) -> tuple[FqPoly, FqPoly]:
        return self.p[i], self.q[i]

    def digit_degrees(self) -> list[int]:
        """Degrees of the digits past the zeroth."""
        return [int(a.deg) for a in self.digits[1:]]

    def value(self, precision=None) -> Laurent:
        """Series of the last convergent (equals the input if terminated)."""
        if not self.digits:
            raise ValueError("empty expansion has no value")
        return Laurent.from_rational(self.p[-1], self.q[-1], precision)

    def __repr__(self):
        degs = ",".join(str(int(a.deg)) for a in self.digits)
        tag = "terminated" if self.terminated else "truncated"
        return f"CFExpansion(q={self.field.q}, degs=[{degs}], {tag})"


def cf_expand(alpha: Laurent, max_digits=None) -> CFExpansion:
    """Expand a series, emitting only digits certified by the window."""
    field = alpha.field
    digits = []
    terminated = False
    try:
        a0 = alpha.poly_part()
    except PrecisionError:
        return CFExpansion(field, [], False)
    digits.append(a0)
    rem = alpha.frac_part()
    while max_digits is None or len(digits) < max_digits:
        if rem.is_zero():
            terminated = True
            break
        if rem.is_zero_to_precision():
            break
        inv = rem.inverse()
        try:
            a = inv.poly_part()
        except PrecisionError:
            break
        digits.append(a)
        rem = inv.frac_part()
    return CFExpansion(field, digits, terminated)


def cf_from_rational(num: FqPoly, den: FqPoly) -> CFExpansion:
    """Exact expansion of num/den by the Euclidean algorithm."""
    if num.field != den.field:
        raise ValueError("polynomials over different fields")
    if den.is_zero():
        raise ZeroDivisionError("rational with zero denominator")
    field = num.field
    digits = []
    while True:
        a, r = divmod(num, den)
        digits.append(a)
        if r.is_zero():
            break
        num, den = den, r
    return CFExpansion(field, digits, True)


def determinant_identity_holds(exp: CFExpansion, i: int) -> bool:
    """p_i q_{i-1} - p_{i-1} q_i is the unit (-1)^(i+1)."""
    if i < 1 or i >= len(exp.digits):
        raise IndexError("need two consecutive convergents")
    field = exp.field
    lhs = exp.p[i] * exp.q[i - 1] - exp.p[i - 1] * exp.q[i]
    sign = field.neg(1) if (i + 1) % 2 else 1
    return lhs == FqPoly.constant(field, sign)


def approx_quality(exp: CFExpansion, alpha: Laurent, i: int):
    """Measured and predicted size of q_i alpha - p_i.

    Returns (measured LogNorm, predicted exponent); the prediction
    -deg q_{i+1} needs digit i+1 and is None when the expansion stops
    at i.
    """
    if i < 0 or i >= len(exp.digits):
        raise IndexError(f"no convergent {i}")
    p_i, q_i = exp.p[i], exp.q[i]
    err = Laurent.from_poly(q_i) * alpha - Laurent.from_poly(p_i)
    measured = err.norm()
    predicted = None
    if i + 1 < len(exp.digits):
        predicted = -int(exp.q[i + 1].deg)
    return measured, predicted


def digit_degree_probability(q: int, d: int, dcap: int) -> Fraction:
    """Exact probability of the tallied degree bin d (pool at dcap)."""
    if d < 1 or d > dcap:
        raise ValueError(f"bin {d} outside 1..{dcap}")
    if d < dcap:
        return Fraction(q - 1, q**d)
    return Fraction(1, q ** (dcap - 1))


class DegreeStats:
    """Tallied digit-degree distribution with its chi-square verdict."""

    def __init__(self, q, dcap, counts, expected, chi2, pvalue):
        self.q = q
        self.dcap = dcap
        self.counts = counts
        self.expected = expected
        self.total = int(counts.sum())
        self.chi2 = float(chi2)
        self.pvalue = float(pvalue)

    def freq(self, d: int) -> float:
        return self.counts[d - 1] / self.total

    def csv_lines(self) -> list[str]:
        out = ["d,count,freq,expected"]
        for d in range(1, self.dcap + 1):
            label = str(d) if d < self.dcap else f">={d}"
            out.append(
                f"{label},{int(self.counts[d - 1])},"
                f"{self.freq(d):.6g},{float(self.expected[d - 1]):.6g}"
            )
        return out

    def __repr__(self):
        return (
            f"DegreeStats(q={self.q}, total={self.total}, "
            f"chi2={self.chi2:.3f}, p={self.pvalue:.4f})"
        )


def degree_statistics(
    q: int,
    nsamples: int,
    precision: int = 64,
    rng=None,
    seed=None,
    dcap: int = 12,
) -> DegreeStats:
    """Digit-degree law over Haar-random series, tallied in the kernel.

    Draws nsamples series with i.i.d. uniform coefficients, tallies
    certified digit degrees (pooled at dcap), and runs a chi-square test
    against the exact law (q-1) q^-d.  The pool threshold shrinks if the
    sample is too small to expect 10 tail hits.
    """
    field = GF(q)
    if rng is None:
        rng = np.random.default_rng(seed)
    if dcap < 2:
        raise ValueError("dcap must be at least 2")
    if precision < dcap:
        raise ValueError("precision window smaller than dcap")
    # keep the pooled bin populated: expected tail count >= 10
    est_total = max(nsamples, 1) * max(precision // 3, 1)
    while dcap > 2 and est_total * float(
        digit_degree_probability(q, dcap, dcap)
    ) < 10.0:
        dcap -= 1
    batch = rng.integers(0, q, size=(nsamples, precision)).astype(np.int64)
    hist = np.zeros(dcap + 1, dtype=np.int64)
    kernels.cf_degree_hist(
        batch,
        dcap,
        hist,
        field.mul_table,
        field.add_table,
        field.neg_table,
        field.inv_table,
    )
    counts = hist[1:].copy()
    total = int(counts.sum())
    probs = np.array(
        [float(digit_degree_probability(q, d, dcap)) for d in range(1, dcap + 1)]
    )
    expected = probs * total
    chi2, pvalue = _scipy_stats.chisquare(counts, f_exp=expected)
    return DegreeStats(q, dcap, counts, expected, chi2, pvalue)
