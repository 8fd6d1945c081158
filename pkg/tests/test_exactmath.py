import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxlogic.exactmath import (
    ContractViolation,
    FarkasCertificate,
    LinearSystem,
    UnboundedPolytope,
    enumerate_vertices,
    format_rational,
    in_row_space,
    lp_feasible,
    lp_maximize,
    nullspace,
    parse_rational,
    rref,
    row_space_rank,
    verify_certificate,
)

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
small_ints = st.integers(min_value=-4, max_value=4)


def test_format_rational_canonical():
    assert format_rational(Fraction(3, 1)) == "3"
    assert format_rational(Fraction(-2, 4)) == "-1/2"
    assert format_rational(0) == "0"


def test_parse_rational_accepts_both_forms():
    assert parse_rational("7") == 7
    assert parse_rational(" -3 / 6 ") == Fraction(-1, 2)
    with pytest.raises(ValueError):
        parse_rational("1.5")


@given(fractions)
def test_rational_roundtrip(x):
    assert parse_rational(format_rational(x)) == x


def test_rank_of_known_matrix():
    rows = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    assert row_space_rank(rows) == 2
    basis, pivots = rref(rows)
    assert pivots == [0, 1]
    assert in_row_space([3, 2, 5], rows)
    assert not in_row_space([0, 0, 1], rows)


@given(st.lists(st.lists(small_ints, min_size=4, max_size=4), min_size=1, max_size=4))
def test_nullspace_is_annihilated_and_rank_nullity(rows):
    ns = nullspace(rows, 4)
    for v in ns:
        assert all(sum(Fraction(a) * b for a, b in zip(r, v)) == 0 for r in rows)
    assert len(ns) + row_space_rank(rows) == 4


def test_contract_violation_on_ragged_rows():
    with pytest.raises(ContractViolation):
        LinearSystem(2, eq_rows=(([1, 2, 3], 1),))


def _brute_force_max(c, A, b):
    """Best objective over all basic solutions of ``A x <= b, x >= 0`` (tiny systems only)."""
    n = len(c)
    rows = [(list(a), bb) for a, bb in zip(A, b)] + [([-int(i == j) for j in range(n)], 0) for i in range(n)]
    best = None
    for combo in itertools.combinations(rows, n):
        M = [list(map(Fraction, r[0])) + [Fraction(r[1])] for r in combo]
        basis, piv = rref(M)
        if len(piv) != n or n in piv:
            continue
        x = [Fraction(0)] * n
        for row, p in zip(basis, piv):
            x[p] = row[n]
        if all(sum(Fraction(a) * v for a, v in zip(r[0], x)) <= r[1] for r in rows):
            val = sum(Fraction(ci) * v for ci, v in zip(c, x))
            best = val if best is None else max(best, val)
    return best


def test_simplex_textbook_problem():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
    sys_ = LinearSystem(2, le_rows=(([1, 0], 4), ([0, 2], 12), ([3, 2], 18)))
    res = lp_maximize([3, 5], sys_)
    assert res.status == "optimal"
    assert res.optimum == 36
    assert res.optimizer == (2, 6)


@settings(max_examples=60, deadline=None)
@given(st.lists(small_ints, min_size=2, max_size=3).flatmap(
    lambda c: st.tuples(
        st.just(c),
        st.lists(st.lists(st.integers(0, 4), min_size=len(c), max_size=len(c)), min_size=1, max_size=3),
        st.lists(st.integers(1, 6), min_size=3, max_size=3),
    )))
def test_simplex_matches_basis_enumeration(data):
    c, A, b = data
    b = b[:len(A)]
    # a box keeps the problem bounded
    A = A + [[int(i == j) for j in range(len(c))] for i in range(len(c))]
    b = b + [5] * len(c)
    res = lp_maximize(c, LinearSystem(len(c), le_rows=tuple(zip(A, b))))
    assert res.status == "optimal"
    assert res.optimum == _brute_force_max(c, A, b)


def test_unbounded_detected():
    res = lp_maximize([1, 0], LinearSystem(2, le_rows=(([0, 1], 1),)))
    assert res.status == "unbounded"


def test_infeasible_gives_valid_certificate():
    sys_ = LinearSystem(2, eq_rows=(([1, 1], 1),), le_rows=(([1, 0], -1),))
    res = lp_maximize([0, 0], sys_)
    assert res.status == "infeasible"
    assert verify_certificate(sys_, res.certificate)


def test_bogus_certificate_rejected():
    sys_ = LinearSystem(1, le_rows=(([1], 1),))
    assert not verify_certificate(sys_, FarkasCertificate((), (Fraction(1),)))
    assert not verify_certificate(sys_, FarkasCertificate((), (Fraction(-1),)))


def test_free_variables_and_negative_rhs():
    sys_ = LinearSystem(1, le_rows=(([-1], 3), ([1], -1)), nonneg=(False,))
    res = lp_maximize([-1], sys_)
    assert res.optimum == 3 and res.optimizer == (-3,)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.lists(small_ints, min_size=2, max_size=2), small_ints), min_size=5, max_size=9))
def test_feasibility_methods_agree(rows):
    sys_ = LinearSystem(2, le_rows=tuple(rows), nonneg=(False, False))
    a = lp_feasible(sys_, method="phase1")
    b = lp_feasible(sys_, method="alternative")
    assert a.feasible == b.feasible
    for r in (a, b):
        if r.feasible:
            assert sys_.is_satisfied_by(r.optimizer)
        else:
            assert verify_certificate(sys_, r.certificate)


def test_alternative_method_contract():
    with pytest.raises(ContractViolation):
        lp_feasible(LinearSystem(1, le_rows=(([1], 1),)), method="alternative")


def test_vertices_of_unit_square_and_simplex():
    square = LinearSystem(2, le_rows=(([1, 0], 1), ([0, 1], 1)))
    assert enumerate_vertices(square) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    simplex = LinearSystem(3, eq_rows=(([1, 1, 1], 1),))
    assert enumerate_vertices(simplex) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_vertices_of_empty_and_unbounded_sets():
    assert enumerate_vertices(LinearSystem(1, le_rows=(([1], -1),))) == []
    with pytest.raises(UnboundedPolytope):
        enumerate_vertices(LinearSystem(2, le_rows=(([1, 0], 1),)))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_vertex_max_equals_lp_on_cube_cut(c):
    sys_ = LinearSystem(3, le_rows=(([1, 0, 0], 1), ([0, 1, 0], 1), ([0, 0, 1], 1), ([1, 1, 1], 2)))
    verts = enumerate_vertices(sys_)
    assert max(sum(a * b for a, b in zip(c, v)) for v in verts) == lp_maximize(c, sys_).optimum
