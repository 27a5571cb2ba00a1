"""Laurent series at infinity over F_q, with tracked precision.

A series is a finite certified window of coefficients: ``top`` is the
exponent of the first stored coefficient, ``coeffs[i]`` is the code of the
coefficient of X^(top-i), and every exponent down to ``floor`` is stored.
Below the floor the coefficients are unknown, unless ``exact`` is set, in
which case they are all zero and the object is a genuine finite sum (a
polynomial in X and 1/X).

Arithmetic propagates the floor so that every stored coefficient of a
result is certified:

* add:      floor = max of the operand floors,
* mul:      floor = max(top_x + floor_y, top_y + floor_x),
* inverse:  floor = floor_x - 2*top_x,

where an exact operand drops out of the max.  A window that becomes empty
without the exact flag is "zero to precision": its norm cannot be
certified and ``norm`` raises PrecisionError, while an exact empty window
is the true zero with norm bottom.

The absolute value is q^top after normalization, recorded as a LogNorm
(the exponent, with a bottom element for zero), so norms multiply by
adding exponents and never leave exact integer arithmetic.

Text form: ``q=3; floor=-5; 2:1,0:2,-1:1`` lists nonzero ``exp:code``
terms in descending exponent order; an ``exact`` flag may follow the
floor.  ``parse_laurent`` round-trips ``to_text``.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import kernels
from .backend import default_precision
from .errors import PrecisionError
from .fields import Fq, FqElem
from .poly import FqPoly, _coerce_scalar

NEG_INF = float("-inf")


class LogNorm:
    """An ultrametric absolute value stored as its base-q exponent.

    LogNorm(e) stands for q^e; LogNorm.bottom() stands for 0.  Products
    of values become sums of exponents, comparisons compare exponents.
    """

    __slots__ = ("e",)

    def __init__(self, e):
        if e != NEG_INF:
            e = int(e)
        self.e = e

    @classmethod
    def bottom(cls) -> "LogNorm":
        return cls(NEG_INF)

    @property
    def is_bottom(self) -> bool:
        return self.e == NEG_INF

    def value(self, q: int) -> Fraction:
        """The actual absolute value q^e as an exact Fraction."""
        if self.is_bottom:
            return Fraction(0)
        return Fraction(q) ** self.e

    def __mul__(self, other):
        if not isinstance(other, LogNorm):
            return NotImplemented
        if self.is_bottom or other.is_bottom:
            return LogNorm.bottom()
        return LogNorm(self.e + other.e)

    def __truediv__(self, other):
        if not isinstance(other, LogNorm):
            return NotImplemented
        if other.is_bottom:
            raise ZeroDivisionError("dividing by a zero norm")
        if self.is_bottom:
            return LogNorm.bottom()
        return LogNorm(self.e - other.e)

    def __pow__(self, n: int):
        if self.is_bottom:
            if n <= 0:
                raise ZeroDivisionError("zero norm to a nonpositive power")
            return LogNorm.bottom()
        return LogNorm(self.e * n)

    def __eq__(self, other):
        if isinstance(other, LogNorm):
            return self.e == other.e
        return NotImplemented

    def __lt__(self, other):
        return self.e < other.e

    def __le__(self, other):
        return self.e <= other.e

    def __gt__(self, other):
        return self.e > other.e

    def __ge__(self, other):
        return self.e >= other.e

    def __hash__(self):
        return hash(("LogNorm", self.e))

    def __repr__(self):
        if self.is_bottom:
            return "LogNorm(bottom)"
        return f"LogNorm({self.e})"


def sup_norm(norms) -> LogNorm:
    """Max of an iterable of LogNorms (bottom for an empty iterable)."""
    best = LogNorm.bottom()
    for n in norms:
        if isinstance(n, Laurent):
            n = n.norm()
        if n > best:
            best = n
    return best


class Laurent:
    """A certified window of a Laurent series at infinity."""

    __slots__ = ("field", "top", "coeffs", "floor", "exact")

    def __init__(self, field: Fq, top: int, coeffs, floor=None, exact=False):
        arr = np.asarray(
            [c.code if isinstance(c, FqElem) else int(c) for c in coeffs],
            dtype=np.int64,
        )
        if arr.size and (arr.min() < 0 or arr.max() >= field.q):
            raise ValueError(f"coefficient code out of range for q={field.q}")
        if floor is None:
            floor = top - arr.size + 1
        if top - floor + 1 != arr.size:
            raise ValueError(
                f"window [{floor}, {top}] does not match {arr.size} coefficients"
            )
        # normalize: leading certified zeros shrink the window from above
        lead = 0
        while lead < arr.size and arr[lead] == 0:
            lead += 1
        arr = arr[lead:]
        top = top - lead
        if arr.size == 0:
            if exact:
                top, floor = -1, 0
            else:
                top = floor - 1
        self.field = field
        self.top = top
        self.coeffs = arr.copy()
        self.coeffs.flags.writeable = False
        self.floor = floor
        self.exact = exact

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, field: Fq) -> "Laurent":
        return cls(field, -1, (), floor=0, exact=True)

    @classmethod
    def one(cls, field: Fq) -> "Laurent":
        return cls(field, 0, (1,), exact=True)

    @classmethod
    def monomial(cls, field: Fq, e: int, code: int = 1) -> "Laurent":
        """code * X^e as an exact series."""
        return cls(field, e, (code,), exact=True)

    @classmethod
    def from_poly(cls, poly: FqPoly) -> "Laurent":
        if poly.is_zero():
            return cls.zero(poly.field)
        return cls(poly.field, int(poly.deg), poly.coeffs[::-1], exact=True)

    @classmethod
    def from_rational(
        cls, num: FqPoly, den: FqPoly, precision=None
    ) -> "Laurent":
        """Expand num/den at infinity to the given precision.

        When den divides num the result is the exact polynomial quotient.
        """
        if num.field != den.field:
            raise ValueError("polynomials over different fields")
        if den.is_zero():
            raise ZeroDivisionError("rational series with zero denominator")
        field = num.field
        if num.is_zero():
            return cls.zero(field)
        quot, rem = divmod(num, den)
        if rem.is_zero():
            return cls.from_poly(quot)
        if precision is None:
            precision = default_precision()
        n = int(num.deg)
        d = int(den.deg)
        # reverse both into series in the local parameter 1/X and divide
        u_den = den.coeffs[::-1]
        inv = kernels.series_inv_unit(
            u_den,
            precision,
            field.mul_table,
            field.add_table,
            field.neg_table,
            field.inv_table,
        )
        u_num = num.coeffs[::-1]
        conv = kernels.poly_mul(
            u_num, inv, field.mul_table, field.add_table
        )[:precision]
        top = n - d
        return cls(field, top, conv, floor=top - precision + 1)

    @classmethod
    def random_unit_ball(cls, field: Fq, rng, precision=None) -> "Laurent":
        """Haar sample of the open unit ball: uniform coefficients at
        exponents -1 down to -precision."""
        if precision is None:
            precision = default_precision()
        codes = rng.integers(0, field.q, size=precision).astype(np.int64)
        return cls(field, -1, codes, floor=-precision)

    # -- shape -----------------------------------------------------------

    def is_zero(self) -> bool:
        """True only for the exact zero."""
        return self.exact and self.coeffs.size == 0

    def is_zero_to_precision(self) -> bool:
        """Empty window without the exact flag: norm is uncertifiable."""
        return not self.exact and self.coeffs.size == 0

    @property
    def width(self) -> int:
        return self.coeffs.size

    def norm(self) -> LogNorm:
        if self.coeffs.size:
            return LogNorm(self.top)
        if self.exact:
            return LogNorm.bottom()
        raise PrecisionError(
            f"series is zero to precision (floor {self.floor}); "
            "norm cannot be certified"
        )

    def __abs__(self) -> LogNorm:
        return self.norm()

    @property
    def valuation(self):
        """Order of vanishing in the local parameter 1/X (minus infinity
        exponent convention: valuation of zero is plus infinity)."""
        n = self.norm()
        return float("inf") if n.is_bottom else -n.e

    def coeff(self, e: int) -> int:
        """Certified coefficient code at exponent e."""
        if e > self.top:
            return 0
        if e >= self.floor:
            return int(self.coeffs[self.top - e])
        if self.exact:
            return 0
        raise PrecisionError(
            f"coefficient at exponent {e} is below the floor {self.floor}"
        )

    def tail_codes(self, depth: int) -> np.ndarray:
        """Array t with t[i] = coefficient of X^-(i+1), i < depth."""
        out = np.zeros(depth, dtype=np.int64)
        for i in range(depth):
            out[i] = self.coeff(-(i + 1))
        return out

    # -- arithmetic ------------------------------------------------------

    def _check_field(self, other: "Laurent"):
        if self.field != other.field:
            raise ValueError("series over different fields")

    def __add__(self, other):
        if not isinstance(other, Laurent):
            return NotImplemented
        self._check_field(other)
        fx = NEG_INF if self.exact else self.floor
        fy = NEG_INF if other.exact else other.floor
        exact = self.exact and other.exact
        floor = max(fx, fy)
        if exact:
            if self.is_zero() and other.is_zero():
                return Laurent.zero(self.field)
            floor = min(
                self.floor if self.coeffs.size else 0,
                other.floor if other.coeffs.size else 0,
            )
        floor = int(floor)
        top = max(self.top, other.top, floor - 1)
        n = top - floor + 1
        out = np.zeros(n, dtype=np.int64)
        for src in (self, other):
            for i in range(src.coeffs.size):
                e = src.top - i
                if e < floor:
                    break
                j = top - e
                out[j] = self.field.add(int(out[j]), int(src.coeffs[i]))
        return Laurent(self.field, top, out, floor=floor, exact=exact)

    def __neg__(self):
        return Laurent(
            self.field,
            self.top,
            self.field.neg_table[self.coeffs],
            floor=self.floor,
            exact=self.exact,
        )

    def __sub__(self, other):
        if not isinstance(other, Laurent):
            return NotImplemented
        return self + (-other)

    def _effective_top(self) -> int:
        # an empty non-exact window still bounds the norm by its floor
        return self.top if self.coeffs.size else self.floor - 1

    def __mul__(self, other):
        if isinstance(other, Laurent):
            self._check_field(other)
            if self.is_zero() or other.is_zero():
                return Laurent.zero(self.field)
            ex = self._effective_top()
            ey = other._effective_top()
            top = ex + ey
            exact = self.exact and other.exact
            if exact:
                floor = self.floor + other.floor
            else:
                fx = NEG_INF if self.exact else self.floor
                fy = NEG_INF if other.exact else other.floor
                floor = int(max(ex + fy, ey + fx))
            n = top - floor + 1
            if n <= 0 or self.coeffs.size == 0 or other.coeffs.size == 0:
                return Laurent(self.field, floor - 1, (), floor=floor)
            conv = kernels.poly_mul(
                self.coeffs,
                other.coeffs,
                self.field.mul_table,
                self.field.add_table,
            )
            if conv.size < n:
                out = np.zeros(n, dtype=np.int64)
                out[: conv.size] = conv
            else:
                out = conv[:n]
            return Laurent(self.field, top, out, floor=floor, exact=exact)
        try:
            c = _coerce_scalar(self.field, other)
        except TypeError:
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def scale(self, code: int) -> "Laurent":
        if code == 0:
            return Laurent.zero(self.field)
        return Laurent(
            self.field,
            self.top,
            self.field.mul_table[code, self.coeffs],
            floor=self.floor,
            exact=self.exact,
        )

    def shift(self, e: int) -> "Laurent":
        """Multiply by X^e (exact exponent shift, any sign)."""
        return Laurent(
            self.field,
            self.top + e,
            self.coeffs,
            floor=self.floor + e,
            exact=self.exact,
        )

    def inverse(self, precision=None) -> "Laurent":
        if self.is_zero():
            raise ZeroDivisionError("inverse of the zero series")
        if self.is_zero_to_precision():
            raise PrecisionError(
                "inverse of a series that is zero to precision"
            )
        if self.exact:
            nout = precision if precision is not None else default_precision()
        else:
            nout = self.coeffs.size
        inv = kernels.series_inv_unit(
            self.coeffs,
            nout,
            self.field.mul_table,
            self.field.add_table,
            self.field.neg_table,
            self.field.inv_table,
        )
        top = -self.top
        exact = self.exact and self.coeffs.size == 1
        return Laurent(
            self.field, top, inv, floor=top - nout + 1, exact=exact
        )

    def __truediv__(self, other):
        if isinstance(other, Laurent):
            return self * other.inverse()
        try:
            c = _coerce_scalar(self.field, other)
        except TypeError:
            return NotImplemented
        return self.scale(self.field.inv(c))

    # -- parts -----------------------------------------------------------

    def poly_part(self) -> FqPoly:
        """The polynomial of terms at exponents >= 0."""
        if self.top < 0:
            if not self.exact and self.floor > 0:
                raise PrecisionError("polynomial part below the floor")
            return FqPoly.zero(self.field)
        if self.floor > 0 and not self.exact:
            raise PrecisionError(
                f"polynomial part needs exponent 0, floor is {self.floor}"
            )
        codes = [self.coeff(e) for e in range(0, self.top + 1)]
        return FqPoly(self.field, codes)

    def frac_part(self) -> "Laurent":
        """Terms at exponents <= -1, with the same floor."""
        floor = min(self.floor, 0)
        if self.top < 0:
            if self.floor == floor:
                return self
            return Laurent(
                self.field, self.top, self.coeffs,
                floor=self.floor, exact=self.exact,
            )
        n = -floor
        out = np.zeros(n, dtype=np.int64)
        take = self.coeffs[self.top + 1:]
        out[: take.size] = take
        return Laurent(self.field, -1, out, floor=floor, exact=self.exact)

    def truncate(self, new_floor: int) -> "Laurent":
        """Forget coefficients below new_floor (floor can only rise)."""
        if new_floor <= self.floor:
            if self.exact and new_floor < self.floor:
                n = self.top - new_floor + 1
                out = np.zeros(n, dtype=np.int64)
                out[: self.coeffs.size] = self.coeffs
                return Laurent(
                    self.field, self.top, out, floor=new_floor, exact=True
                )
            return self
        keep = self.top - new_floor + 1
        if keep < 0:
            keep = 0
        dropped = self.coeffs[keep:]
        exact = self.exact and not np.any(dropped)
        return Laurent(
            self.field,
            self.top,
            self.coeffs[:keep],
            floor=new_floor,
            exact=exact,
        )

    # -- comparisons and text --------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Laurent):
            return NotImplemented
        return (
            self.field == other.field
            and self.top == other.top
            and self.floor == other.floor
            and self.exact == other.exact
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def __hash__(self):
        return hash(
            (self.field.q, self.top, self.floor, self.exact,
             self.coeffs.tobytes())
        )

    def to_text(self) -> str:
        parts = [f"q={self.field.q}", f"floor={self.floor}"]
        if self.exact:
            parts.append("exact")
        terms = []
        for i in range(self.coeffs.size):
            c = int(self.coeffs[i])
            if c:
                terms.append(f"{self.top - i}:{c}")
        parts.append(",".join(terms))
        return "; ".join(parts)

    def __repr__(self):
        return f"Laurent({self.to_text()})"


def parse_laurent(text: str, field: Fq = None) -> Laurent:
    """Parse the ``q=..; floor=..[; exact]; e:c,...`` text form."""
    from .fields import GF

    segs = [s.strip() for s in text.strip().split(";")]
    if len(segs) < 3:
        raise ValueError(f"malformed series text {text!r}")
    if not segs[0].startswith("q="):
        raise ValueError(f"series text must start with q=, got {segs[0]!r}")
    q = int(segs[0][2:])
    if field is None:
        field = GF(q)
    elif field.q != q:
        raise ValueError(f"series text says q={q}, field has q={field.q}")
    if not segs[1].startswith("floor="):
        raise ValueError(f"second segment must be floor=, got {segs[1]!r}")
    floor = int(segs[1][6:])
    exact = False
    idx = 2
    if segs[idx] == "exact":
        exact = True
        idx += 1
        if len(segs) <= idx:
            raise ValueError(f"missing term segment in {text!r}")
    termtext = segs[idx]
    terms = []
    if termtext:
        for item in termtext.split(","):
            e_s, _, c_s = item.partition(":")
            e, c = int(e_s), int(c_s)
            if not 0 < c < field.q:
                raise ValueError(f"bad coefficient code {c} in {text!r}")
            terms.append((e, c))
    for (e1, _), (e2, _) in zip(terms, terms[1:]):
        if e1 <= e2:
            raise ValueError(f"exponents must strictly descend in {text!r}")
    if not terms:
        if exact:
            return Laurent.zero(field)
        return Laurent(field, floor - 1, (), floor=floor)
    top = terms[0][0]
    if top < floor:
        raise ValueError(f"term exponent {top} below floor {floor}")
    arr = np.zeros(top - floor + 1, dtype=np.int64)
    for e, c in terms:
        if e < floor:
            raise ValueError(f"term exponent {e} below floor {floor}")
        arr[top - e] = c
    return Laurent(field, top, arr, floor=floor, exact=exact)
