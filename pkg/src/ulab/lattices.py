"""Rank-d lattices over F_q[X] inside the Laurent series field.

A lattice is the F_q[X]-row-span of a nonsingular d x d matrix of series.
Reduction to weak Popov form (no two rows share a pivot column) makes the
row degrees read off the successive minima; the reduction happens in a
packed integer-code cube so the hot loop can be compiled.

Precision is carried through reduction as a per-row error exponent: a
packed row agrees with the untruncated source above its error, and a
simple transformation with degree shift e propagates errors as
max(err_i, e + err_k).  A reduced row only certifies its norm when its
degree sits strictly above its error, otherwise PrecisionError.

For unimodular lattices the lattice-height statistic delta is the norm
of the shortest nonzero vector, reported as its base-q exponent; the
diagonal flow with expansion block m and contraction block n scales the
first m columns by X^(n t) and the last n by X^(-m t).

Serialized form (exact lattices only)::

    d=2 sigma=1 q=3
    1*X^1, 2*X^0
    0, 1*X^2

Rows are polynomial strings for X^sigma times the actual entries, so
entries with exponents down to -sigma stay integral.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import kernels
from .errors import PrecisionError, SingularLatticeError
from .fields import Fq, GF
from .laurent import Laurent, LogNorm, sup_norm
from .poly import FqPoly, parse_poly

# error exponent standing for "row is exact" in the packed cube; the
# reduction may add small degree shifts to it, so exactness is read back
# through a threshold rather than by equality
EXACT_ERR = -(1 << 40)
EXACT_CUT = -(1 << 39)


def _as_laurent(field: Fq, entry) -> Laurent:
    if isinstance(entry, Laurent):
        if entry.field != field:
            raise ValueError("entry over a different field")
        return entry
    if isinstance(entry, FqPoly):
        if entry.field != field:
            raise ValueError("entry over a different field")
        return Laurent.from_poly(entry)
    raise TypeError(f"cannot use {entry!r} as a lattice entry")


class PolyLattice:
    """A lattice given by generator rows of Laurent series."""

    def __init__(self, field: Fq, rows):
        self.field = field
        self.rows = [[_as_laurent(field, e) for e in row] for row in rows]
        self.d = len(self.rows)
        for row in self.rows:
            if len(row) != self.d:
                raise ValueError("generator matrix must be square")

    # -- constructors ----------------------------------------------------

    @classmethod
    def standard(cls, field: Fq, d: int) -> "PolyLattice":
        rows = [
            [
                Laurent.one(field) if i == j else Laurent.zero(field)
                for j in range(d)
            ]
            for i in range(d)
        ]
        return cls(field, rows)

    @classmethod
    def from_polys(cls, field: Fq, rows, sigma: int = 0) -> "PolyLattice":
        """Rows of polynomials representing X^sigma times the entries."""
        conv = [
            [Laurent.from_poly(p).shift(-sigma) for p in row] for row in rows
        ]
        return cls(field, conv)

    # -- basic maps ------------------------------------------------------

    def scale_columns(self, exponents) -> "PolyLattice":
        """Multiply column j by X^exponents[j]."""
        if len(exponents) != self.d:
            raise ValueError("need one exponent per column")
        rows = [
            [e.shift(exponents[j]) for j, e in enumerate(row)]
            for row in self.rows
        ]
        return PolyLattice(self.field, rows)

    def apply_flow(self, t: int, m: int, n: int) -> "PolyLattice":
        """Diagonal flow: first m columns by X^(n t), last n by X^(-m t)."""
        if m + n != self.d:
            raise ValueError(f"block sizes {m}+{n} do not match d={self.d}")
        exps = [n * t] * m + [-m * t] * n
        return self.scale_columns(exps)

    def right_multiply(self, g) -> "PolyLattice":
        """Rows times a d x d matrix of series (change of embedding)."""
        g = [[_as_laurent(self.field, e) for e in row] for row in g]
        if len(g) != self.d or any(len(r) != self.d for r in g):
            raise ValueError("matrix shape mismatch")
        rows = []
        for i in range(self.d):
            new = []
            for j in range(self.d):
                acc = Laurent.zero(self.field)
                for k in range(self.d):
                    acc = acc + self.rows[i][k] * g[k][j]
                new.append(acc)
            rows.append(new)
        return PolyLattice(self.field, rows)

    def determinant(self) -> Laurent:
        """Leibniz expansion; meant for small d."""
        if self.d > 6:
            raise ValueError("determinant expansion limited to d <= 6")
        acc = Laurent.zero(self.field)
        neg_one = self.field.neg(1)
        for perm in itertools.permutations(range(self.d)):
            term = Laurent.one(self.field)
            for i, j in enumerate(perm):
                term = term * self.rows[i][j]
            inv = sum(
                1
                for a in range(self.d)
                for b in range(a + 1, self.d)
                if perm[a] > perm[b]
            )
            if inv % 2:
                term = term.scale(neg_one)
            acc = acc + term
        return acc

    def covolume_exponent(self) -> int:
        n = self.determinant().norm()
        if n.is_bottom:
            raise SingularLatticeError("zero determinant")
        return n.e

    # -- packing and reduction -------------------------------------------

    def _pack(self):
        """Integer-code cube C[d, d, W], shift s, and row error exponents."""
        d = self.d
        floors = []
        tops = []
        for row in self.rows:
            for e in row:
                floors.append(e.floor)
                if e.coeffs.size:
                    tops.append(e.top)
        s = max(0, -min(floors)) if floors else 0
        W = max(t + s for t in tops) + 1 if tops else 1
        if W < 1:
            W = 1
        C = np.zeros((d, d, W), dtype=np.int64)
        err = np.full(d, EXACT_ERR, dtype=np.int64)
        for i, row in enumerate(self.rows):
            for j, e in enumerate(row):
                for idx in range(e.coeffs.size):
                    C[i, j, e.top - idx + s] = e.coeffs[idx]
                if not e.exact:
                    bad = e.floor - 1 + s
                    if bad > err[i]:
                        err[i] = bad
        return C, s, err

    def reduce(self) -> "PolyLattice":
        """Weak Popov form of the same lattice, with precision carried."""
        C, s, err = self._pack()
        rowdeg = np.zeros(self.d, dtype=np.int64)
        status = kernels.weak_popov(
            C,
            rowdeg,
            err,
            self.field.mul_table,
            self.field.add_table,
            self.field.neg_table,
            self.field.inv_table,
        )
        if status == 2:
            raise RuntimeError("weak Popov reduction did not converge")
        if status == 1:
            if np.all(err < EXACT_CUT):
                raise SingularLatticeError(
                    "generator rows are linearly dependent"
                )
            raise PrecisionError(
                "a row vanished to precision during reduction"
            )
        for i in range(self.d):
            if rowdeg[i] <= err[i]:
                raise PrecisionError(
                    f"reduced row {i} has degree {int(rowdeg[i])} not above "
                    f"its error exponent {int(err[i])}"
                )
        rows = []
        for i in range(self.d):
            exact = bool(err[i] < EXACT_CUT)
            top_idx = int(rowdeg[i])
            low = 0 if exact else int(err[i]) + 1
            floor = low - s
            row = []
            for j in range(self.d):
                codes = [C[i, j, t] for t in range(top_idx, low - 1, -1)]
                row.append(
                    Laurent(
                        self.field,
                        top_idx - s,
                        codes,
                        floor=floor,
                        exact=exact,
                    )
                )
            rows.append(row)
        return PolyLattice(self.field, rows)

    # -- norms and minima ------------------------------------------------

    def row_norms(self) -> list[LogNorm]:
        return [sup_norm(row) for row in self.rows]

    def successive_minima(self) -> list[int]:
        """Ascending norm exponents of a reduced basis."""
        reduced = self.reduce()
        exps = []
        for nrm in reduced.row_norms():
            if nrm.is_bottom:
                raise SingularLatticeError("zero row in reduced basis")
            exps.append(nrm.e)
        return sorted(exps)

    def shortest_exponent(self) -> int:
        return self.successive_minima()[0]

    def delta_exponent(self) -> int:
        """Exponent of delta, the shortest-vector norm (unimodular case)."""
        return self.shortest_exponent()

    def cusp_member(self, r: int) -> bool:
        """Whether delta <= q^-r."""
        return self.delta_exponent() <= -r

    def is_exact(self) -> bool:
        return all(e.exact for row in self.rows for e in row)

    # -- text form -------------------------------------------------------

    def to_text(self) -> str:
        if not self.is_exact():
            raise ValueError("only exact lattices have a text form")
        lows = [
            e.floor for row in self.rows for e in row if e.coeffs.size
        ]
        sigma = max(0, -min(lows)) if lows else 0
        lines = [f"d={self.d} sigma={sigma} q={self.field.q}"]
        for row in self.rows:
            polys = [e.shift(sigma).poly_part().to_string() for e in row]
            lines.append(", ".join(polys))
        return "\n".join(lines)

    def __repr__(self):
        return f"PolyLattice(q={self.field.q}, d={self.d})"


def lattice_from_text(text: str) -> PolyLattice:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    head = dict(part.split("=") for part in lines[0].split())
    d = int(head["d"])
    sigma = int(head["sigma"])
    q = int(head["q"])
    field = GF(q)
    if len(lines) != d + 1:
        raise ValueError(f"expected {d} rows, got {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        polys = [parse_poly(field, p) for p in ln.split(",")]
        if len(polys) != d:
            raise ValueError(f"row {ln!r} does not have {d} entries")
        rows.append(polys)
    return PolyLattice.from_polys(field, rows, sigma=sigma)


def shortest_vector_oracle(lat: PolyLattice):
    """Certified shortest-vector exponent with a coefficient witness.

    Independent of the reduction path: for ascending norm exponent e it
    sets up the F_q-linear system expressing that a combination
    sum_i a_i row_i has all entries of degree at most e, with the a_i
    polynomial coefficient vectors, and asks for a kernel vector.  The
    first e admitting a nonzero solution is the answer; the witness is
    re-verified with plain polynomial arithmetic.  Exact lattices only.

    Returns (exponent, coefficient polynomials).
    """
    if not lat.is_exact():
        raise ValueError("oracle needs an exact lattice")
    field = lat.field
    d = lat.d
    lows = [e.floor for row in lat.rows for e in row if e.coeffs.size]
    s = max(0, -min(lows)) if lows else 0
    B = [
        [e.shift(s).poly_part() for e in row] for row in lat.rows
    ]
    degdet = PolyLattice.from_polys(field, B).covolume_exponent()
    maxdeg = max(
        (int(p.deg) for row in B for p in row if not p.is_zero()), default=0
    )
    e_max = degdet // d
    for e in range(0, e_max + 1):
        A = e + (d - 1) * maxdeg
        ncols = d * (A + 1)
        hi = A + maxdeg
        rows_per_col = max(hi - e, 0)
        M = np.zeros((d * rows_per_col, ncols), dtype=np.int64)
        for j in range(d):
            for i in range(d):
                p = B[i][j]
                for c in range(p.coeffs.size):
                    code = int(p.coeffs[c])
                    if code == 0:
                        continue
                    # a_i X^k * coeff X^c lands at degree k + c
                    for k in range(A + 1):
                        t = k + c
                        if t > e and t <= hi:
                            M[j * rows_per_col + (t - e - 1),
                              i * (A + 1) + k] = code
        vec = kernels.gauss_kernel_vector(
            M,
            field.mul_table,
            field.add_table,
            field.neg_table,
            field.inv_table,
        )
        if not np.any(vec):
            continue
        coeffs = [
            FqPoly(field, vec[i * (A + 1): (i + 1) * (A + 1)])
            for i in range(d)
        ]
        combo = [FqPoly.zero(field) for _ in range(d)]
        for i in range(d):
            if coeffs[i].is_zero():
                continue
            for j in range(d):
                combo[j] = combo[j] + coeffs[i] * B[i][j]
        degs = [int(c.deg) for c in combo if not c.is_zero()]
        if not degs:
            raise AssertionError("oracle witness collapsed to zero")
        got = max(degs)
        if got > e:
            raise AssertionError("oracle witness exceeds its degree bound")
        return got - s, coeffs
    raise AssertionError("no short vector found below the covolume bound")


def cartan_exponents(field: Fq, g) -> list[int]:
    """Elementary divisor exponents of a nonsingular matrix of series.

    Smith reduction over the valuation ring: pick the largest-norm entry
    as pivot, clear its row and column with honest series arithmetic
    (quotients have nonnegative valuation, so everything stays integral),
    recurse on the complement.  Returns base-q norm exponents of the
    pivots in pivot order.
    """
    work = [[_as_laurent(field, e) for e in row] for row in g]
    d = len(work)
    if any(len(row) != d for row in work):
        raise ValueError("matrix must be square")
    out = []
    for r in range(d):
        best = None
        best_e = None
        bound = None
        for i in range(r, d):
            for j in range(r, d):
                entry = work[i][j]
                if entry.is_zero():
                    continue
                if entry.is_zero_to_precision():
                    b = entry.floor - 1
                    if bound is None or b > bound:
                        bound = b
                    continue
                e = entry.norm().e
                if best_e is None or e > best_e:
                    best_e = e
                    best = (i, j)
        if best is None:
            if bound is not None:
                raise PrecisionError(
                    "pivot search sees only zero-to-precision entries"
                )
            raise SingularLatticeError("matrix is singular")
        if bound is not None and bound >= best_e:
            raise PrecisionError(
                "an uncertified entry could dominate the pivot"
            )
        i0, j0 = best
        work[r], work[i0] = work[i0], work[r]
        for row in work:
            row[r], row[j0] = row[j0], row[r]
        pivot = work[r][r]
        pinv = pivot.inverse()
        for i in range(r + 1, d):
            if work[i][r].is_zero():
                continue
            f = work[i][r] * pinv
            for j in range(r, d):
                work[i][j] = work[i][j] - f * work[r][j]
        for j in range(r + 1, d):
            if work[r][j].is_zero():
                continue
            f = work[r][j] * pinv
            for i in range(r, d):
                work[i][j] = work[i][j] - f * work[i][r]
        out.append(best_e)
    return out


def cartan_distance(field: Fq, g) -> int:
    """Sum of absolute elementary divisor exponents."""
    return sum(abs(e) for e in cartan_exponents(field, g))


def flow_matrix(field: Fq, t: int, m: int, n: int):
    """The diagonal flow element as an exact matrix of series."""
    d = m + n
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            if i != j:
                row.append(Laurent.zero(field))
            elif i < m:
                row.append(Laurent.monomial(field, n * t))
            else:
                row.append(Laurent.monomial(field, -m * t))
        rows.append(row)
    return rows
