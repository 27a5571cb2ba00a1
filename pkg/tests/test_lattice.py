"""Polynomial lattices: reduction invariants, the shortest-vector
oracle, and the diagonal flow."""

import numpy as np
import pytest

from ulab.errors import SingularLatticeError
from ulab.fields import GF
from ulab.lattices import (PolyLattice, cartan_distance, cartan_exponents,
                           flow_matrix, lattice_from_text,
                           shortest_vector_oracle)
from ulab.laurent import Laurent
from ulab.poly import FqPoly


def random_lattice(F, rng, d, maxdeg=4):
    while True:
        rows = [
            [FqPoly(F, rng.integers(0, F.q, size=int(rng.integers(1, maxdeg + 2))))
             for _ in range(d)]
            for _ in range(d)
        ]
        lat = PolyLattice.from_polys(F, rows)
        if not lat.determinant().is_zero():
            return lat


CASES = [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)]


@pytest.mark.parametrize("q,d", CASES)
def test_reduction_preserves_determinant_exponent(q, d):
    F = GF(q)
    rng = np.random.default_rng(q * d * 7)
    for _ in range(25):
        lat = random_lattice(F, rng, d)
        before = lat.determinant().norm().e
        after = lat.reduce().determinant().norm().e
        assert before == after


@pytest.mark.parametrize("q,d", CASES)
def test_minima_sum_equals_covolume(q, d):
    # over the series field the reduced basis is orthogonal: no defect
    F = GF(q)
    rng = np.random.default_rng(q * d * 11)
    for _ in range(25):
        lat = random_lattice(F, rng, d)
        assert sum(lat.successive_minima()) == lat.covolume_exponent()


@pytest.mark.parametrize("q,d", [(2, 2), (3, 2), (2, 3)])
def test_minima_invariant_under_row_operations(q, d):
    """Unimodular row operations change the basis, not the module."""
    F = GF(q)
    rng = np.random.default_rng(q * d * 13)
    for _ in range(20):
        lat = random_lattice(F, rng, d)
        minima = lat.successive_minima()
        rows = [list(r) for r in lat.rows]
        for _ in range(6):
            i, j = rng.integers(0, d, size=2)
            if i == j:
                continue
            f = FqPoly(F, rng.integers(0, F.q, size=int(rng.integers(1, 3))))
            rows[j] = [rows[j][k] + Laurent.from_poly(f) * rows[i][k]
                       for k in range(d)]
        other = PolyLattice(F, rows)
        assert other.successive_minima() == minima


@pytest.mark.parametrize("q,d", CASES)
def test_oracle_agrees_with_reduction(q, d):
    F = GF(q)
    rng = np.random.default_rng(q * d * 3)
    for _ in range(20):
        lat = random_lattice(F, rng, d)
        e, witness = shortest_vector_oracle(lat)
        assert e == lat.shortest_exponent()
        # the witness really is a lattice vector of that norm
        combo = None
        for a, row in zip(witness, lat.rows):
            part = [Laurent.from_poly(a) * entry for entry in row]
            combo = part if combo is None else [
                x + y for x, y in zip(combo, part)
            ]
        norms = [c.norm().e for c in combo if not c.is_zero()]
        assert norms and max(norms) == e


def test_oracle_handles_off_diagonal_cancellation():
    # rows nearly parallel: the short vector is a combination, not a row
    F = GF(2)
    X = FqPoly.X(F)
    one = FqPoly.one(F)
    rows = [[X**3 + one, X**3], [X**3, X**3 + X]]
    lat = PolyLattice.from_polys(F, rows)
    e, _ = shortest_vector_oracle(lat)
    assert e == lat.shortest_exponent()
    assert e < 3


def test_singular_basis_rejected():
    F = GF(3)
    X = FqPoly.X(F)
    rows = [[X, X], [X + X, X + X]]   # second row = 2 * first
    lat = PolyLattice.from_polys(F, rows)
    with pytest.raises(SingularLatticeError):
        lat.successive_minima()


def test_text_round_trip():
    F = GF(3)
    rng = np.random.default_rng(40)
    for _ in range(10):
        lat = random_lattice(F, rng, 2)
        txt = lat.to_text()
        assert lattice_from_text(txt).to_text() == txt


@pytest.mark.parametrize("m,n,t", [(1, 1, 1), (1, 1, 5), (2, 1, 3), (1, 2, 4)])
def test_flow_cartan_shape(m, n, t):
    F = GF(2)
    g = flow_matrix(F, t, m, n)
    exps = cartan_exponents(F, g)
    assert sorted(exps, reverse=True) == [n * t] * m + [-m * t] * n
    assert cartan_distance(F, g) == 2 * m * n * t
    # time additivity of the distance along the one-parameter group
    g2 = flow_matrix(F, 2 * t, m, n)
    assert cartan_distance(F, g2) == 2 * cartan_distance(F, g)


def test_flow_preserves_covolume():
    F = GF(3)
    rng = np.random.default_rng(17)
    lat = random_lattice(F, rng, 2)
    flowed = lat.apply_flow(2, 1, 1)
    assert flowed.covolume_exponent() == lat.covolume_exponent()


def test_standard_lattice():
    F = GF(2)
    lat = PolyLattice.standard(F, 3)
    assert lat.successive_minima() == [0, 0, 0]
    assert lat.covolume_exponent() == 0
