"""Small finite fields F_q with integer-coded elements and lookup tables.

An element of F_q (q = p^k) is stored as an integer code in range(q).  The
base-p digits of the code are the coordinates of the element in the
polynomial basis 1, w, w^2, ... of F_p[w] / (modulus), least significant
digit first.  For prime q this makes the code equal to the element itself
as a residue mod p.

Two arithmetic paths exist:

* a table-free path that works directly on digit vectors (used to build
  the tables and kept around so tests can cross-check), and
* dense q-by-q add/mul tables plus inverse/negation tables, which is what
  the hot kernels index into.

A discrete-log pair (log/antilog over a fixed generator) is also built for
moderate q; tests check it against the table-free multiplication.
"""

from __future__ import annotations

import numpy as np

MAX_TABLE_Q = 4096


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def factor_prime_power(q: int) -> tuple[int, int]:
    """Split q into (p, k) with q = p^k, p prime.  ValueError otherwise."""
    if q < 2:
        raise ValueError(f"field order must be at least 2, got {q}")
    for p in range(2, q + 1):
        if q % p == 0:
            if not _is_prime(p):
                raise ValueError(f"{q} is not a prime power")
            k = 0
            rest = q
            while rest % p == 0:
                rest //= p
                k += 1
            if rest != 1:
                raise ValueError(f"{q} is not a prime power")
            return p, k
    raise ValueError(f"{q} is not a prime power")


def _digits(code: int, p: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        out.append(code % p)
        code //= p
    return tuple(out)


def _undigits(digits, p: int) -> int:
    code = 0
    for d in reversed(digits):
        code = code * p + d
    return code


def _poly_mulmod(a, b, modulus, p):
    """Multiply two digit tuples mod (modulus, p).  modulus is monic, len k+1."""
    k = len(modulus) - 1
    prod = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    for top in range(len(prod) - 1, k - 1, -1):
        c = prod[top]
        if c:
            prod[top] = 0
            for j in range(k + 1):
                prod[top - k + j] = (prod[top - k + j] - c * modulus[j]) % p
    out = prod[:k]
    out += [0] * (k - len(out))
    return tuple(out)


def _is_irreducible(modulus, p) -> bool:
    """Trial division by all monic polynomials of degree <= deg/2 over F_p."""
    k = len(modulus) - 1
    if k == 1:
        return True
    for deg in range(1, k // 2 + 1):
        for code in range(p**deg):
            cand = list(_digits(code, p, deg)) + [1]
            if _poly_divides(cand, modulus, p):
                return False
    return True


def _poly_divides(div, num, p) -> bool:
    rem = list(num)
    dk = len(div) - 1
    inv_lead = pow(div[dk], p - 2, p) if div[dk] != 1 else 1
    while len(rem) - 1 >= dk:
        top = rem[-1]
        if top:
            f = (top * inv_lead) % p
            off = len(rem) - 1 - dk
            for j in range(dk + 1):
                rem[off + j] = (rem[off + j] - f * div[j]) % p
        rem.pop()
    return all(c == 0 for c in rem)


def _default_modulus(p: int, k: int) -> tuple[int, ...]:
    """First monic irreducible of degree k over F_p in code order."""
    if k == 1:
        return (0, 1)
    for code in range(p**k):
        cand = _digits(code, p, k) + (1,)
        if _is_irreducible(cand, p):
            return cand
    raise AssertionError("no irreducible polynomial found")


class Fq:
    """The finite field with q elements, q a prime power.

    Elements are integer codes.  The field object owns the arithmetic
    tables and exposes both code-level operations (add, mul, ...) used by
    the kernels and an FqElem wrapper for convenient scalar work.
    """

    def __init__(self, q: int, modulus=None):
        p, k = factor_prime_power(q)
        self.q = q
        self.p = p
        self.deg = k
        if modulus is None:
            modulus = _default_modulus(p, k)
        else:
            modulus = tuple(int(c) % p for c in modulus)
            if len(modulus) != k + 1 or modulus[k] != 1:
                raise ValueError(
                    f"modulus must be monic of degree {k}, got {modulus}"
                )
            if not _is_irreducible(modulus, p):
                raise ValueError(f"modulus {modulus} is reducible over F_{p}")
        self.modulus = modulus
        if q <= MAX_TABLE_Q:
            self._build_tables()
            self._build_log_tables()
        else:
            raise ValueError(f"field order {q} above supported table size")

    # -- table-free reference arithmetic on codes ------------------------

    def add_free(self, a: int, b: int) -> int:
        da = _digits(a, self.p, self.deg)
        db = _digits(b, self.p, self.deg)
        return _undigits([(x + y) % self.p for x, y in zip(da, db)], self.p)

    def neg_free(self, a: int) -> int:
        da = _digits(a, self.p, self.deg)
        return _undigits([(-x) % self.p for x in da], self.p)

    def mul_free(self, a: int, b: int) -> int:
        da = _digits(a, self.p, self.deg)
        db = _digits(b, self.p, self.deg)
        return _undigits(_poly_mulmod(da, db, self.modulus, self.p), self.p)

    def inv_free(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_q")
        # Fermat: a^(q-2)
        result, base, e = 1, a, self.q - 2
        while e:
            if e & 1:
                result = self.mul_free(result, base)
            base = self.mul_free(base, base)
            e >>= 1
        return result

    # -- tables ----------------------------------------------------------

    def _build_tables(self):
        q = self.q
        add_t = np.empty((q, q), dtype=np.int64)
        mul_t = np.empty((q, q), dtype=np.int64)
        for a in range(q):
            for b in range(a, q):
                s = self.add_free(a, b)
                m = self.mul_free(a, b)
                add_t[a, b] = s
                add_t[b, a] = s
                mul_t[a, b] = m
                mul_t[b, a] = m
        neg_t = np.array([self.neg_free(a) for a in range(q)], dtype=np.int64)
        inv_t = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            inv_t[a] = self.inv_free(a)
        self.add_table = add_t
        self.mul_table = mul_t
        self.neg_table = neg_t
        self.inv_table = inv_t

    def _build_log_tables(self):
        """Discrete log / antilog over the first generator found by order test."""
        q = self.q
        gen = None
        for g in range(2, q):
            seen = 1
            x = g
            order = 1
            while x != 1:
                x = int(self.mul_table[x, g])
                order += 1
                if order > q:
                    break
            if order == q - 1:
                gen = g
                break
        if gen is None and q == 2:
            gen = 1
        if gen is None:
            raise AssertionError(f"no multiplicative generator found for q={q}")
        alog = np.empty(q - 1, dtype=np.int64)
        log = np.full(q, -1, dtype=np.int64)
        x = 1
        for i in range(q - 1):
            alog[i] = x
            log[x] = i
            x = int(self.mul_table[x, gen])
        self.generator = gen
        self.alog_table = alog
        self.log_table = log

    def mul_via_log(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        e = (int(self.log_table[a]) + int(self.log_table[b])) % (self.q - 1)
        return int(self.alog_table[e])

    # -- code-level API --------------------------------------------------

    def add(self, a: int, b: int) -> int:
        return int(self.add_table[a, b])

    def sub(self, a: int, b: int) -> int:
        return int(self.add_table[a, self.neg_table[b]])

    def neg(self, a: int) -> int:
        return int(self.neg_table[a])

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_q")
        return int(self.inv_table[a])

    def from_prime_subfield(self, n: int) -> int:
        """Code of the image of the integer n under Z -> F_p -> F_q."""
        return n % self.p

    def vector(self, a: int) -> tuple[int, ...]:
        """Coordinates of the element over F_p in the polynomial basis."""
        return _digits(a, self.p, self.deg)

    def elements(self):
        for code in range(self.q):
            yield FqElem(self, code)

    def element(self, code: int) -> "FqElem":
        if not 0 <= code < self.q:
            raise ValueError(f"element code {code} out of range for q={self.q}")
        return FqElem(self, code)

    @property
    def zero(self) -> "FqElem":
        return FqElem(self, 0)

    @property
    def one(self) -> "FqElem":
        return FqElem(self, 1)

    def random_code(self, rng) -> int:
        return int(rng.integers(self.q))

    def __eq__(self, other):
        return (
            isinstance(other, Fq)
            and self.q == other.q
            and self.modulus == other.modulus
        )

    def __hash__(self):
        return hash((self.q, self.modulus))

    def __repr__(self):
        return f"Fq({self.q})"


def _elem_str(field: Fq, code: int) -> str:
    if field.deg == 1:
        return str(code)
    digits = field.vector(code)
    terms = []
    for i in range(field.deg - 1, -1, -1):
        c = digits[i]
        if c == 0:
            continue
        if i == 0:
            terms.append(str(c))
        else:
            head = "" if c == 1 else str(c)
            var = "w" if i == 1 else f"w^{i}"
            terms.append(head + var)
    return "+".join(terms) if terms else "0"


class FqElem:
    """A field element: a code bound to its field, with operator sugar."""

    __slots__ = ("field", "code")

    def __init__(self, field: Fq, code: int):
        self.field = field
        self.code = code

    def _coerce(self, other) -> int:
        if isinstance(other, FqElem):
            if other.field != self.field:
                raise ValueError("elements from different fields")
            return other.code
        if isinstance(other, int):
            return self.field.from_prime_subfield(other)
        return NotImplemented

    def __add__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FqElem(self.field, self.field.add(self.code, c))

    __radd__ = __add__

    def __sub__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FqElem(self.field, self.field.sub(self.code, c))

    def __rsub__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FqElem(self.field, self.field.sub(c, self.code))

    def __neg__(self):
        return FqElem(self.field, self.field.neg(self.code))

    def __mul__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FqElem(self.field, self.field.mul(self.code, c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FqElem(self.field, self.field.mul(self.code, self.field.inv(c)))

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = FqElem(self.field, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "FqElem":
        return FqElem(self.field, self.field.inv(self.code))

    @property
    def vector(self) -> tuple[int, ...]:
        return self.field.vector(self.code)

    def __eq__(self, other):
        if isinstance(other, FqElem):
            return self.field == other.field and self.code == other.code
        if isinstance(other, int):
            return self.code == self.field.from_prime_subfield(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.field.q, self.code))

    def __bool__(self):
        return self.code != 0

    def __repr__(self):
        return f"F{self.field.q}({_elem_str(self.field, self.code)})"


_FIELD_CACHE: dict[tuple, Fq] = {}


def GF(q: int, modulus=None) -> Fq:
    """Field constructor with a small cache, so GF(4) is GF(4) everywhere."""
    key = (q, tuple(modulus) if modulus is not None else None)
    if key not in _FIELD_CACHE:
        _FIELD_CACHE[key] = Fq(q, modulus)
    return _FIELD_CACHE[key]
