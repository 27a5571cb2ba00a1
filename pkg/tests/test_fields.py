import numpy as np
import pytest

from ulab.fields import GF, factor_prime_power


FIELDS = [2, 3, 4, 5, 7, 8, 9, 16, 25]


def test_factor_prime_power():
    assert factor_prime_power(8) == (2, 3)
    assert factor_prime_power(25) == (5, 2)
    assert factor_prime_power(7) == (7, 1)
    for bad in (1, 6, 12, 100):
        with pytest.raises(ValueError):
            factor_prime_power(bad)


def test_non_prime_power_rejected():
    with pytest.raises(ValueError):
        GF(6)


@pytest.mark.parametrize("q", FIELDS)
def test_field_axioms_sampled(q):
    """Associativity, commutativity, distributivity on random triples."""
    F = GF(q)
    rng = np.random.default_rng(q * 101)
    for _ in range(200):
        a, b, c = (int(x) for x in rng.integers(0, q, size=3))
        assert F.add(a, b) == F.add(b, a)
        assert F.mul(a, b) == F.mul(b, a)
        assert F.add(F.add(a, b), c) == F.add(a, F.add(b, c))
        assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))


@pytest.mark.parametrize("q", FIELDS)
def test_identities_inverses(q):
    F = GF(q)
    for a in range(q):
        assert F.add(a, 0) == a
        assert F.mul(a, 1) == a
        assert F.add(a, F.neg(a)) == 0
        assert F.mul(a, 0) == 0
        if a != 0:
            assert F.mul(a, F.inv(a)) == 1
    with pytest.raises(ZeroDivisionError):
        F.inv(0)


@pytest.mark.parametrize("q", FIELDS)
def test_tables_match_table_free_path(q):
    """The dense lookup tables agree with digit-vector arithmetic."""
    F = GF(q)
    for a in range(q):
        assert F.neg_table[a] == F.neg_free(a)
        if a:
            assert F.inv_table[a] == F.inv_free(a)
        for b in range(q):
            assert F.add_table[a, b] == F.add_free(a, b)
            assert F.mul_table[a, b] == F.mul_free(a, b)


@pytest.mark.parametrize("q", FIELDS)
def test_frobenius_fixes_everything(q):
    # a^q = a for every a in F_q
    F = GF(q)
    for a in range(q):
        acc = 1
        for _ in range(q):
            acc = F.mul(acc, a)
        assert acc == a


@pytest.mark.parametrize("q", [3, 4, 8, 9, 25])
def test_generator_has_full_order(q):
    F = GF(q)
    g = F.generator
    seen = set()
    x = 1
    for _ in range(q - 1):
        x = F.mul(x, g)
        seen.add(x)
    assert len(seen) == q - 1
    assert x == 1


@pytest.mark.parametrize("q", [4, 8, 9, 16])
def test_log_tables_invert_each_other(q):
    F = GF(q)
    for a in range(1, q):
        assert F.alog_table[F.log_table[a]] == a
    rng = np.random.default_rng(5)
    for _ in range(100):
        a, b = (int(x) for x in rng.integers(1, q, size=2))
        assert F.mul_via_log(a, b) == F.mul(a, b)


def test_characteristic_addition():
    # adding any element to itself p times gives zero
    for q in (2, 3, 4, 9, 8):
        F = GF(q)
        for a in range(q):
            acc = 0
            for _ in range(F.p):
                acc = F.add(acc, a)
            assert acc == 0
