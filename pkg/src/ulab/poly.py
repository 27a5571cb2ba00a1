"""Dense polynomials over F_q.

Coefficients live in a little-endian numpy int64 array of field codes
(index i holds the coefficient of X^i) with no trailing zeros; the zero
polynomial is the empty array and has degree minus infinity.  Construction
APIs (``from_codes``, the constructor, ``from_string``) speak raw codes;
arithmetic with bare Python ints coerces them through the prime subfield,
matching FqElem, so for non-prime q the two conventions differ and codes
should be used when a specific basis vector is meant.

The text form is a sum of ``code*X^exp`` terms, highest exponent first,
for example ``2*X^3+1*X^1+2*X^0``; ``parse_poly`` also accepts the looser
spellings ``X^3``, ``2*X`` and bare constants.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .fields import Fq, FqElem

NEG_INF = float("-inf")


def _coerce_scalar(field: Fq, value) -> int:
    """Field code for an FqElem or a prime-subfield integer."""
    if isinstance(value, FqElem):
        if value.field != field:
            raise ValueError("scalar from a different field")
        return value.code
    if isinstance(value, (int, np.integer)):
        return field.from_prime_subfield(int(value))
    raise TypeError(f"cannot use {value!r} as a scalar in F_{field.q}")


class FqPoly:
    """A polynomial in F_q[X]."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: Fq, coeffs=()):
        arr = np.asarray(
            [c.code if isinstance(c, FqElem) else int(c) for c in coeffs],
            dtype=np.int64,
        )
        if arr.size and (arr.min() < 0 or arr.max() >= field.q):
            raise ValueError(f"coefficient code out of range for q={field.q}")
        n = arr.size
        while n > 0 and arr[n - 1] == 0:
            n -= 1
        self.field = field
        self.coeffs = arr[:n].copy()
        self.coeffs.flags.writeable = False

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, field: Fq) -> "FqPoly":
        return cls(field, ())

    @classmethod
    def one(cls, field: Fq) -> "FqPoly":
        return cls(field, (1,))

    @classmethod
    def constant(cls, field: Fq, code: int) -> "FqPoly":
        return cls(field, (code,))

    @classmethod
    def X(cls, field: Fq, exp: int = 1, code: int = 1) -> "FqPoly":
        """The monomial code*X^exp."""
        if exp < 0:
            raise ValueError("monomial exponent must be nonnegative")
        c = [0] * exp + [code]
        return cls(field, c)

    @classmethod
    def from_codes(cls, field: Fq, codes) -> "FqPoly":
        return cls(field, codes)

    @classmethod
    def from_string(cls, field: Fq, text: str) -> "FqPoly":
        return parse_poly(field, text)

    # -- shape -----------------------------------------------------------

    @property
    def deg(self):
        """Degree as an int, or minus infinity for the zero polynomial."""
        return self.coeffs.size - 1 if self.coeffs.size else NEG_INF

    @property
    def lc(self) -> int:
        """Leading coefficient code (0 for the zero polynomial)."""
        return int(self.coeffs[-1]) if self.coeffs.size else 0

    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    def is_monic(self) -> bool:
        return self.coeffs.size > 0 and self.coeffs[-1] == 1

    def __getitem__(self, i: int) -> int:
        """Coefficient code of X^i (0 beyond the degree)."""
        if i < 0:
            raise IndexError("negative exponent")
        return int(self.coeffs[i]) if i < self.coeffs.size else 0

    def __len__(self):
        return self.coeffs.size

    def __bool__(self):
        return self.coeffs.size > 0

    def _arr1(self) -> np.ndarray:
        """Coefficient array with at least one slot, for the kernels."""
        if self.coeffs.size:
            return self.coeffs
        return np.zeros(1, dtype=np.int64)

    # -- ring operations -------------------------------------------------

    def _check_field(self, other: "FqPoly"):
        if self.field != other.field:
            raise ValueError("polynomials over different fields")

    def __add__(self, other):
        if not isinstance(other, FqPoly):
            return NotImplemented
        self._check_field(other)
        a, b = self.coeffs, other.coeffs
        if a.size < b.size:
            a, b = b, a
        out = a.copy()
        if b.size:
            out[: b.size] = self.field.add_table[a[: b.size], b]
        return FqPoly(self.field, out)

    def __neg__(self):
        return FqPoly(self.field, self.field.neg_table[self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, FqPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, FqPoly):
            self._check_field(other)
            if self.is_zero() or other.is_zero():
                return FqPoly.zero(self.field)
            out = kernels.poly_mul(
                self.coeffs,
                other.coeffs,
                self.field.mul_table,
                self.field.add_table,
            )
            return FqPoly(self.field, out)
        try:
            c = _coerce_scalar(self.field, other)
        except TypeError:
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def scale(self, code: int) -> "FqPoly":
        """Multiply by the field element with the given code."""
        if code == 0 or self.is_zero():
            return FqPoly.zero(self.field)
        return FqPoly(self.field, self.field.mul_table[code, self.coeffs])

    def shift(self, e: int) -> "FqPoly":
        """Multiply by X^e (e >= 0)."""
        if e < 0:
            raise ValueError("shift exponent must be nonnegative")
        if self.is_zero() or e == 0:
            return self
        out = np.zeros(self.coeffs.size + e, dtype=np.int64)
        out[e:] = self.coeffs
        return FqPoly(self.field, out)

    def __divmod__(self, other):
        if not isinstance(other, FqPoly):
            return NotImplemented
        self._check_field(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if self.coeffs.size < other.coeffs.size:
            return FqPoly.zero(self.field), self
        quot, rem = kernels.poly_divmod(
            self.coeffs,
            other.coeffs,
            self.field.mul_table,
            self.field.add_table,
            self.field.neg_table,
            self.field.inv_table,
        )
        return FqPoly(self.field, quot), FqPoly(self.field, rem)

    def __floordiv__(self, other):
        out = divmod(self, other)
        if out is NotImplemented:
            return NotImplemented
        return out[0]

    def __mod__(self, other):
        out = divmod(self, other)
        if out is NotImplemented:
            return NotImplemented
        return out[1]

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative polynomial power")
        result = FqPoly.one(self.field)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def monic(self) -> "FqPoly":
        """Scale so the leading coefficient is 1 (zero stays zero)."""
        if self.is_zero() or self.coeffs[-1] == 1:
            return self
        return self.scale(self.field.inv(self.lc))

    def __call__(self, x):
        """Evaluate by Horner's rule; returns an FqElem."""
        c = _coerce_scalar(self.field, x)
        acc = 0
        for i in range(self.coeffs.size - 1, -1, -1):
            acc = self.field.add(self.field.mul(acc, c), int(self.coeffs[i]))
        return FqElem(self.field, acc)

    # -- comparisons and text --------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, FqPoly):
            return NotImplemented
        return self.field == other.field and np.array_equal(
            self.coeffs, other.coeffs
        )

    def __hash__(self):
        return hash((self.field.q, self.coeffs.tobytes()))

    def to_string(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for i in range(self.coeffs.size - 1, -1, -1):
            c = int(self.coeffs[i])
            if c:
                terms.append(f"{c}*X^{i}")
        return "+".join(terms)

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"FqPoly(q={self.field.q}, {self.to_string()})"


def parse_poly(field: Fq, text: str) -> FqPoly:
    """Parse the ``code*X^exp+...`` text form (tolerant of spacing)."""
    text = text.strip()
    if text in ("0", ""):
        return FqPoly.zero(field)
    coeffs: dict[int, int] = {}
    for raw in text.split("+"):
        term = raw.strip().replace(" ", "")
        if not term:
            raise ValueError(f"empty term in polynomial string {text!r}")
        if "X" in term:
            head, _, tail = term.partition("X")
            if head in ("", "*"):
                code = 1
            elif head.endswith("*"):
                code = int(head[:-1])
            else:
                raise ValueError(f"bad term {raw!r} in polynomial string")
            if tail == "":
                exp = 1
            elif tail.startswith("^"):
                exp = int(tail[1:])
            else:
                raise ValueError(f"bad exponent in term {raw!r}")
        else:
            code = int(term)
            exp = 0
        if exp < 0:
            raise ValueError(f"negative exponent in term {raw!r}")
        if not 0 <= code < field.q:
            raise ValueError(f"coefficient code {code} out of range for q={field.q}")
        if exp in coeffs:
            coeffs[exp] = field.add(coeffs[exp], code)
        else:
            coeffs[exp] = code
    arr = np.zeros(max(coeffs) + 1, dtype=np.int64)
    for exp, code in coeffs.items():
        arr[exp] = code
    return FqPoly(field, arr)


def poly_gcd(a: FqPoly, b: FqPoly) -> FqPoly:
    """Monic greatest common divisor by the Euclidean algorithm."""
    if a.field != b.field:
        raise ValueError("polynomials over different fields")
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def random_poly(field: Fq, deg: int, rng, monic: bool = False) -> FqPoly:
    """Uniform polynomial of exact degree deg (deg < 0 gives zero)."""
    if deg < 0:
        return FqPoly.zero(field)
    codes = rng.integers(0, field.q, size=deg + 1).astype(np.int64)
    if monic:
        codes[deg] = 1
    elif codes[deg] == 0:
        codes[deg] = int(rng.integers(1, field.q))
    return FqPoly(field, codes)
