"""Diophantine approximation against a rate function, and its dynamics.

The objects here connect two descriptions of how well a matrix A of
series is approximated by polynomial vectors:

* the static one: solutions (p, q) with ||Aq + p||^m < psi(||q||^n),
  found by exhaustive search over q up to a degree bound, and
* the dynamical one: excursions of the flowed lattice spanned by
  ((I_m, 0), (A^T, I_n)) into the cusp, measured by the height
  Delta_t = -log_q delta(g_t Lambda).

The bridge is the depth schedule r(t): the largest integer r with
psi(q^(n(mt-r))) <= q^(-m(nt+r)).  A solution of degree d and quality
exponent v produces Delta_t >= floor((v-d)/2) at the two integer times
nearest (d+v)/2, and conversely an excursion with Delta_t >= r(t)+1
yields a solution with d <= t-r(t)-1 and v >= t+r(t)+1; the off-by-one
band in both directions is sharp for the discretized comparisons, so the
consistency check below enforces exactly that band and nothing looser.

All rate-function comparisons happen in exact arithmetic on base-q
exponents; nothing is ever compared through floats.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import kernels
from .backend import default_precision
from .errors import PrecisionError
from .fields import Fq
from .laurent import Laurent
from .lattices import PolyLattice
from .poly import FqPoly
from .util import parallel_map, rng_for


def _fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class PsiSpec:
    """A non-increasing approximation rate in log-base-q coordinates.

    Three kinds:

    * ``power``:    psi(q^j) = q^(offset - tau*j),
    * ``powerlog``: psi(q^j) = q^(offset - tau*j) * j^(-c) for j >= 1,
      with the convention psi = +infinity at j <= 0,
    * ``table``:    explicit rational values log_q psi(q^j) per j.

    Comparisons against integer powers of q are exact: for the powerlog
    kind the inequality is cross-multiplied into integer powers before
    comparing, so no floats enter any threshold decision.
    """

    def __init__(self, kind, tau=None, c=None, offset=0, table=None):
        if kind not in ("power", "powerlog", "table"):
            raise ValueError(f"unknown kind {kind!r}")
        self.kind = kind
        self.tau = _fr(tau) if tau is not None else None
        self.c = _fr(c) if c is not None else None
        self.offset = _fr(offset)
        self.table = dict(table) if table is not None else None
        if kind in ("power", "powerlog"):
            if self.tau is None or self.tau < 0:
                raise ValueError("tau must be a nonnegative rational")
        if kind == "powerlog" and (self.c is None or self.c < 0):
            raise ValueError("powerlog needs a nonnegative log exponent c")
        if kind == "table":
            if not self.table:
                raise ValueError("table kind needs explicit values")
            self.table = {int(j): _fr(v) for j, v in self.table.items()}
            items = sorted(self.table.items())
            for (j1, v1), (j2, v2) in zip(items, items[1:]):
                if v2 > v1:
                    raise ValueError(
                        f"table values must be non-increasing, "
                        f"broken between j={j1} and j={j2}"
                    )

    @classmethod
    def power(cls, tau, offset=0) -> "PsiSpec":
        return cls("power", tau=tau, offset=offset)

    @classmethod
    def power_log(cls, tau, c, offset=0) -> "PsiSpec":
        return cls("powerlog", tau=tau, c=c, offset=offset)

    @classmethod
    def from_table(cls, table) -> "PsiSpec":
        return cls("table", table=table)

    def scaled(self, shift) -> "PsiSpec":
        """Multiply psi by the constant q^shift."""
        shift = _fr(shift)
        if self.kind == "table":
            return PsiSpec.from_table(
                {j: v + shift for j, v in self.table.items()}
            )
        return PsiSpec(
            self.kind, tau=self.tau, c=self.c, offset=self.offset + shift
        )

    def log_value(self, j: int, q: int = None):
        """log_q psi(q^j); exact Fraction except for the powerlog kind,
        whose log factor needs the base and comes back as a float."""
        if self.kind == "power":
            return self.offset - self.tau * j
        if self.kind == "powerlog":
            if j <= 0:
                raise ValueError("powerlog rate is defined for j >= 1")
            if q is None:
                raise ValueError("powerlog log_value needs the base q")
            import math

            return float(self.offset - self.tau * j) - float(
                self.c
            ) * math.log(j) / math.log(q)
        if j not in self.table:
            raise ValueError(f"table rate has no value at j={j}")
        return self.table[j]

    def le_power_q(self, q: int, j: int, E) -> bool:
        """Exact test of psi(q^j) <= q^E."""
        E = _fr(E)
        if self.kind == "power":
            return self.offset - self.tau * j <= E
        if self.kind == "powerlog":
            if j <= 0:
                # psi is +infinity left of its domain
                return self.c == 0 and (self.offset - self.tau * j <= E)
            w = self.offset - self.tau * j - E  # compare q^w <= j^c
            a, b = w.numerator, w.denominator
            c1, c2 = self.c.numerator, self.c.denominator
            # raise both sides to b*c2 > 0
            lhs = Fraction(q) ** (a * c2)
            rhs = Fraction(j) ** (c1 * b)
            return lhs <= rhs
        if j not in self.table:
            raise ValueError(f"table rate has no value at j={j}")
        return self.table[j] <= E

    def __repr__(self):
        if self.kind == "power":
            return f"PsiSpec.power(tau={self.tau}, offset={self.offset})"
        if self.kind == "powerlog":
            return (
                f"PsiSpec.power_log(tau={self.tau}, c={self.c}, "
                f"offset={self.offset})"
            )
        return f"PsiSpec.from_table({len(self.table)} values)"


def solve_rt(psi: PsiSpec, q: int, m: int, n: int, t: int) -> int:
    """The depth schedule r(t): largest r with
    psi(q^(n(mt-r))) <= q^(-m(nt+r)).

    Raises ValueError when even r = 0 fails (the schedule is undefined
    below its starting time and is reported, not clamped).
    """
    r = _solve_rt_any(psi, q, m, n, t)
    if r is None or r < 0:
        raise ValueError(
            f"depth schedule undefined at t={t} (no nonnegative depth "
            "satisfies the matching inequality)"
        )
    return r


def _solve_rt_any(psi: PsiSpec, q: int, m: int, n: int, t: int):
    """Largest integer r (any sign) satisfying the matching inequality,
    or None if none exists above the scan floor."""
    if psi.kind == "power":
        # offset - tau*n*(mt-r) <= -m*(nt+r)  <=>
        # r*(m + tau*n) <= m*n*t*(tau-1) - offset
        import math

        den = m + psi.tau * n
        num = m * n * t * (psi.tau - 1) - psi.offset
        r_int = math.floor(Fraction(num) / Fraction(den))
        assert psi.le_power_q(q, n * (m * t - r_int), -m * (n * t + r_int))
        assert not psi.le_power_q(
            q, n * (m * t - r_int - 1), -m * (n * t + r_int + 1)
        )
        return r_int
    lo = -n * t - 8 - abs(int(psi.offset))
    for r in range(m * t, lo - 1, -1):
        try:
            ok = psi.le_power_q(q, n * (m * t - r), -m * (n * t + r))
        except ValueError:
            # table exhausted at this argument: treat as unknown
            ok = False
        if ok:
            return r
    return None


class SeriesReport:
    """Verdicts for the two equivalent convergence tests."""

    def __init__(self, verdict_rt, verdict_psi, partial_rt, partial_psi,
                 horizon):
        self.verdict_rt = verdict_rt
        self.verdict_psi = verdict_psi
        self.partial_rt = partial_rt
        self.partial_psi = partial_psi
        self.horizon = horizon

    @property
    def agree(self) -> bool:
        return self.verdict_rt == self.verdict_psi

    def __repr__(self):
        return (
            f"SeriesReport(rt={self.verdict_rt}, psi={self.verdict_psi}, "
            f"horizon={self.horizon})"
        )


def _closed_form_verdict(psi: PsiSpec):
    if psi.kind == "power":
        if psi.tau > 1:
            return "convergent"
        return "divergent"
    if psi.kind == "powerlog":
        if psi.tau > 1:
            return "convergent"
        if psi.tau < 1:
            return "divergent"
        return "convergent" if psi.c > 1 else "divergent"
    return None


def _heuristic_verdict(increments) -> str:
    """Crude horizon classification of a positive series by its tail.

    The last quarter of the partial sum is compared with the total; a
    vanishing share reads as convergent, a proportional share as
    divergent, anything in between stays inconclusive.
    """
    total = sum(increments)
    if total == 0:
        return "convergent"
    k = len(increments)
    tail = sum(increments[3 * k // 4:])
    share = tail / total
    if share < 0.05:
        return "convergent"
    if share > 0.15:
        return "divergent"
    return "inconclusive"


def series_test(psi: PsiSpec, q: int, m: int, n: int,
                horizon: int = 200) -> SeriesReport:
    """Classify sum_t q^(-(m+n) r(t)) and sum_j psi(q^j) q^j.

    Closed forms decide the power kinds; the table kind falls back to a
    horizon heuristic and may come back inconclusive.  The two verdicts
    agreeing is the content of the covering lemma and is asserted for
    closed-form kinds.
    """
    import math

    inc_rt = []
    for t in range(1, horizon + 1):
        r = _solve_rt_any(psi, q, m, n, t)
        if r is None:
            break
        inc_rt.append(float(q) ** (-(m + n) * r))
    inc_psi = []
    for j in range(1, horizon + 1):
        if psi.kind == "power":
            lv = float(psi.offset - psi.tau * j)
        elif psi.kind == "powerlog":
            lv = float(psi.offset - psi.tau * j) - float(
                psi.c
            ) * math.log(j) / math.log(q)
        else:
            if j not in psi.table:
                break
            lv = float(psi.table[j])
        inc_psi.append(float(q) ** (lv + j))
    closed = _closed_form_verdict(psi)
    if closed is not None:
        verdict_rt = verdict_psi = closed
    else:
        verdict_rt = _heuristic_verdict(inc_rt) if inc_rt else "inconclusive"
        verdict_psi = _heuristic_verdict(inc_psi) if inc_psi else "inconclusive"
    return SeriesReport(
        verdict_rt, verdict_psi, sum(inc_rt), sum(inc_psi), horizon
    )


class ApproximationLattice:
    """The unipotent lattice attached to an approximation matrix.

    Rows are ((I_m, 0), (A^T, I_n)), so the row span over F_q[X] is
    {(p + Aq, q)}.  The diagonal flow expands the first m coordinates,
    where the small combination p + Aq lives, and contracts the last n,
    squeezing the free part q.
    """

    def __init__(self, field: Fq, A, m: int, n: int):
        if isinstance(A, Laurent):
            A = [[A]]
        self.field = field
        self.A = A
        self.m = m
        self.n = n
        if len(A) != m or any(len(row) != n for row in A):
            raise ValueError(f"matrix must be {m}x{n}")
        d = m + n
        rows = []
        for i in range(m):
            rows.append(
                [
                    Laurent.one(field) if j == i else Laurent.zero(field)
                    for j in range(d)
                ]
            )
        for jj in range(n):
            row = [A[i][jj] for i in range(m)]
            row += [
                Laurent.one(field) if j2 == jj else Laurent.zero(field)
                for j2 in range(n)
            ]
            rows.append(row)
        self.lattice = PolyLattice(field, rows)

    def flowed(self, t: int) -> PolyLattice:
        return self.lattice.apply_flow(t, self.m, self.n)

    def delta_exponent(self, t: int = 0) -> int:
        return self.flowed(t).delta_exponent()


class ExcursionTrace:
    """Flow heights and cusp hits of one approximation lattice."""

    def __init__(self, records):
        # records: list of (t, r, delta_height, hit)
        self.records = list(records)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def heights(self) -> list[int]:
        return [rec[2] for rec in self.records]

    def hits(self) -> list[int]:
        return [rec[0] for rec in self.records if rec[3]]

    def hit_count(self) -> int:
        return len(self.hits())

    def max_height(self) -> int:
        return max(self.heights()) if self.records else 0

    def __repr__(self):
        return (
            f"ExcursionTrace({len(self.records)} steps, "
            f"{self.hit_count()} hits)"
        )


def excursion_trace(
    lat: ApproximationLattice, psi: PsiSpec, t_max: int, t_min: int = 1
) -> ExcursionTrace:
    """Heights Delta_t and hit flags Delta_t >= r(t) for t in range.

    The reduced basis of step t is flowed by one unit to seed step t+1,
    so each reduction starts from an almost-reduced matrix.
    """
    qv = lat.field.q
    records = []
    current = lat.lattice.apply_flow(t_min, lat.m, lat.n).reduce()
    t = t_min
    while t <= t_max:
        delta = min(
            nrm.e for nrm in current.row_norms()
        )
        height = -delta
        r = solve_rt(psi, qv, lat.m, lat.n, t)
        records.append((t, r, height, height >= r))
        t += 1
        if t <= t_max:
            current = current.apply_flow(1, lat.m, lat.n).reduce()
    return ExcursionTrace(records)


class Solution:
    """One approximation solution (p, q) with its quality exponent."""

    __slots__ = ("qvec", "pvec", "degree", "quality", "quality_exact")

    def __init__(self, qvec, pvec, degree, quality, quality_exact):
        self.qvec = qvec
        self.pvec = pvec
        self.degree = degree
        self.quality = quality
        self.quality_exact = quality_exact

    def __repr__(self):
        tag = "" if self.quality_exact else ">="
        return (
            f"Solution(deg={self.degree}, quality={tag}{self.quality})"
        )


class SolutionSet:
    """All rate-beating solutions up to a degree bound."""

    def __init__(self, solutions, counts_by_degree, D, cap):
        self.solutions = solutions
        self.counts_by_degree = counts_by_degree
        self.D = D
        self.cap = cap

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def count_in_degree_range(self, lo: int, hi: int) -> int:
        """Solutions with lo < deg q <= hi."""
        return int(
            sum(
                self.counts_by_degree[d]
                for d in range(max(lo + 1, 0), min(hi, self.D) + 1)
            )
        )

    def __repr__(self):
        return f"SolutionSet({len(self.solutions)} solutions, D={self.D})"


def _solution_thresholds(psi: PsiSpec, q: int, m: int, n: int, D: int,
                         cap: int) -> np.ndarray:
    """thr[d] = least quality exponent v making degree-d vectors solve,
    or cap+2 when no v up to cap+1 suffices."""
    thr = np.full(D + 1, cap + 2, dtype=np.int64)
    for d in range(D + 1):
        for v in range(1, cap + 2):
            try:
                if not psi.le_power_q(q, n * d, -m * v):
                    thr[d] = v
                    break
            except ValueError:
                break
    return thr


def brute_force_solutions(
    A,
    psi: PsiSpec,
    D: int,
    m: int = 1,
    n: int = 1,
    cap: int = None,
    collect: bool = True,
) -> SolutionSet:
    """Exhaustive scan of nonzero q with deg <= D, p forced to the
    polynomial part.

    For one-dimensional targets the scan runs in the compiled odometer
    kernel; the general case walks the same logic in Python and is meant
    for small blocks.  Raises PrecisionError if the target's certified
    window cannot support the requested quality cap.
    """
    if isinstance(A, Laurent):
        field = A.field
        if (m, n) != (1, 1):
            raise ValueError("a single series means m = n = 1")
    else:
        field = A[0][0].field
    qv = field.q
    if cap is None:
        cap = 2 * D + 8
    thr = _solution_thresholds(psi, qv, m, n, D, cap)
    if (m, n) == (1, 1):
        alpha = A if isinstance(A, Laurent) else A[0][0]
        return _scan_one_dim(alpha, psi, D, cap, thr, collect)
    return _scan_general(A, psi, m, n, D, cap, thr, collect)


def _scan_one_dim(alpha: Laurent, psi, D, cap, thr, collect) -> SolutionSet:
    field = alpha.field
    qv = field.q
    need = cap + D + 1
    tail = alpha.tail_codes(need)  # raises PrecisionError if too shallow
    afrac = np.zeros(need + 1, dtype=np.int64)
    afrac[1:] = tail
    total = qv ** (D + 1)
    maxw = total if collect else 1
    wq = np.zeros((maxw, D + 1), dtype=np.int64)
    wdeg = np.zeros(maxw, dtype=np.int64)
    wdepth = np.zeros(maxw, dtype=np.int64)
    hist = np.zeros((D + 1, cap + 2), dtype=np.int64)
    counts = np.zeros(D + 1, dtype=np.int64)
    nfound = kernels.dioph_scan(
        afrac,
        D,
        cap,
        thr,
        maxw,
        wq,
        wdeg,
        wdepth,
        hist,
        counts,
        field.mul_table,
        field.add_table,
        field.neg_table,
    )
    solutions = []
    if collect:
        for i in range(nfound):
            qpoly = FqPoly(field, wq[i])
            prod = alpha * Laurent.from_poly(qpoly)
            ppoly = -prod.poly_part()
            v = int(wdepth[i])
            solutions.append(
                Solution(
                    (qpoly,),
                    (ppoly,),
                    int(wdeg[i]),
                    v,
                    v <= cap,
                )
            )
    return SolutionSet(solutions, counts, D, cap)


def _iter_nonzero_vectors(field, n, D):
    """All nonzero q in F_q[X]^n with every deg <= D, coefficient order."""
    qv = field.q
    total = qv ** (n * (D + 1))
    for code in range(1, total):
        rest = code
        vec = []
        for _ in range(n):
            comp = []
            for _ in range(D + 1):
                comp.append(rest % qv)
                rest //= qv
            vec.append(FqPoly(field, comp))
        yield tuple(vec)


def _scan_general(A, psi, m, n, D, cap, thr, collect) -> SolutionSet:
    field = A[0][0].field
    qv = field.q
    counts = np.zeros(D + 1, dtype=np.int64)
    solutions = []
    for qvec in _iter_nonzero_vectors(field, n, D):
        dq = max(int(p.deg) for p in qvec if not p.is_zero())
        combos = []
        for i in range(m):
            acc = Laurent.zero(field)
            for j in range(n):
                if qvec[j].is_zero():
                    continue
                acc = acc + A[i][j] * Laurent.from_poly(qvec[j])
            combos.append(acc)
        pvec = tuple(-c.poly_part() for c in combos)
        v = cap + 1
        for c, p in zip(combos, pvec):
            resid = c.frac_part()
            if resid.is_zero():
                continue
            if resid.is_zero_to_precision():
                if -(resid.floor - 1) <= cap:
                    raise PrecisionError(
                        "residual window too shallow for the quality cap"
                    )
                continue
            v = min(v, -resid.norm().e)
        if v >= int(thr[dq]):
            counts[dq] += 1
            if collect:
                solutions.append(
                    Solution(qvec, pvec, dq, v, v <= cap)
                )
    return SolutionSet(solutions, counts, D, cap)


class ConsistencyReport:
    """Outcome of the exact static/dynamic cross-validation."""

    def __init__(self, forward_checked, backward_checked, violations):
        self.forward_checked = forward_checked
        self.backward_checked = backward_checked
        self.violations = violations

    @property
    def ok(self) -> bool:
        return not self.violations

    def __repr__(self):
        return (
            f"ConsistencyReport(forward={self.forward_checked}, "
            f"backward={self.backward_checked}, "
            f"violations={len(self.violations)})"
        )


def consistency_check(
    alpha: Laurent, psi: PsiSpec, t_max: int, band: int = 1
) -> ConsistencyReport:
    """Exact two-way check between solutions and excursions (m = n = 1).

    Forward: every solution of degree d and quality v with both tent
    times in range forces height >= r - band at one of the two integer
    times nearest (d+v)/2.  Backward: every hit with height >= r(t)+band
    yields a solution with degree <= t - r(t) - band and quality
    >= t + r(t) + band.  Any violation is returned, none are tolerated
    by the caller's assertion.
    """
    field = alpha.field
    qv = field.q
    D = t_max
    cap = 2 * t_max + 2
    sols = brute_force_solutions(alpha, psi, D, cap=cap)
    lat = ApproximationLattice(field, alpha, 1, 1)
    trace = excursion_trace(lat, psi, t_max)
    rs = {t: r for (t, r, _, _) in trace.records}
    heights = {t: h for (t, _, h, _) in trace.records}
    violations = []
    fwd = 0
    for sol in sols:
        d, v = sol.degree, sol.quality
        if not sol.quality_exact:
            # true quality is even deeper; the tent peak moves right,
            # out of any window this bounded check can see
            continue
        t1 = (d + v) // 2
        t2 = t1 + ((d + v) % 2)
        if t2 > t_max or t1 < 1:
            continue
        fwd += 1
        margin = max(heights[t] - rs[t] for t in {t1, t2})
        if margin < -band:
            violations.append(
                ("forward", d, v, t1, t2, margin)
            )
    bwd = 0
    for (t, r, h, hit) in trace.records:
        if h < r + band:
            continue
        bwd += 1
        want_d = t - r - band
        want_v = t + r + band
        found = any(
            s.degree <= want_d
            and (s.quality >= want_v or not s.quality_exact)
            for s in sols
        )
        if not found:
            violations.append(("backward", t, r, h))
    return ConsistencyReport(fwd, bwd, violations)


class KGReport:
    """Monte Carlo summary of the convergence/divergence dichotomy."""

    def __init__(self, psi_desc, q, m, n, samples, D, horizon, verdict,
                 frac_with_solution, ci_half_width, mean_hits):
        self.psi_desc = psi_desc
        self.q = q
        self.m = m
        self.n = n
        self.samples = samples
        self.D = D
        self.horizon = horizon
        self.verdict = verdict
        self.frac_with_solution = frac_with_solution
        self.ci_half_width = ci_half_width
        self.mean_hits = mean_hits

    def csv_lines(self) -> list[str]:
        head = (
            "psi,q,m,n,samples,D,horizon,verdict,"
            "frac_with_solution,ci_half_width,mean_hits"
        )
        row = (
            f"{self.psi_desc},{self.q},{self.m},{self.n},{self.samples},"
            f"{self.D},{self.horizon},{self.verdict},"
            f"{self.frac_with_solution:.6g},{self.ci_half_width:.6g},"
            f"{self.mean_hits:.6g}"
        )
        return [head, row]

    def __repr__(self):
        return (
            f"KGReport({self.verdict}, frac={self.frac_with_solution:.3f}"
            f"+-{self.ci_half_width:.3f}, hits={self.mean_hits:.2f})"
        )


def kg_experiment(
    field: Fq,
    psi: PsiSpec,
    m: int,
    n: int,
    samples: int,
    D: int,
    seed: int,
    horizon: int = 0,
    precision: int = None,
    workers: int = 1,
) -> KGReport:
    """Sample Haar-random targets and measure the dichotomy.

    Counts the fraction of samples with at least one solution of degree
    in (D/2, D], and optionally mean cusp hits over a t-horizon.  The
    per-sample generator is keyed by (seed, index), so reports are
    byte-identical for any worker count.
    """
    if precision is None:
        precision = max(default_precision(), 3 * D + 16)
    qv = field.q

    def one(i):
        rng = rng_for(seed, i)
        A = [
            [
                Laurent.random_unit_ball(field, rng, precision=precision)
                for _ in range(n)
            ]
            for _ in range(m)
        ]
        target = A[0][0] if (m, n) == (1, 1) else A
        sols = brute_force_solutions(
            target, psi, D, m=m, n=n, collect=False
        )
        got = sols.count_in_degree_range(D // 2, D) > 0
        hits = 0
        if horizon > 0:
            lat = ApproximationLattice(field, A, m, n)
            hits = excursion_trace(lat, psi, horizon).hit_count()
        return (1 if got else 0, hits)

    outcomes = parallel_map(one, samples, workers)
    wins = sum(o[0] for o in outcomes)
    hits_mean = float(np.mean([o[1] for o in outcomes])) if samples else 0.0
    frac = wins / samples if samples else 0.0
    half = 1.96 * float(np.sqrt(max(frac * (1 - frac), 1e-12) / max(samples, 1)))
    verdict = series_test(psi, qv, m, n).verdict_psi
    return KGReport(
        repr(psi), qv, m, n, samples, D, horizon, verdict,
        frac, half, hits_mean,
    )
