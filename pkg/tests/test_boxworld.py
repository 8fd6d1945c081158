import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxlogic.boxworld import (
    GAMMA,
    Atom,
    BoxPolytope,
    BoxShape,
    BoxState,
    ClassicalMeasure,
    UnsupportedShape,
    classically_correlated_state,
    classically_correlated_states,
    mixture,
    phi,
    phi_preimage_pair,
    question_subset,
    uniform_state,
)

S = BoxShape(2, 2)


def _pr_boxes():
    """The eight extremal non-local boxes: alpha xor beta = a*b xor u*a xor v*b xor w."""
    out = []
    for u, v, w in itertools.product((0, 1), repeat=3):
        vec = [Fraction(0)] * 16
        for a, b in S.settings():
            for alpha, beta in S.outcomes():
                if alpha ^ beta == (a * b) ^ (u * a) ^ (v * b) ^ w:
                    vec[S.var(a, b, alpha, beta)] = Fraction(1, 2)
        out.append(tuple(vec))
    return out


def test_index_layout():
    assert S.n_rows == S.n_cols == 4 and S.n_vars == 16
    assert S.var(0, 0, 0, 0) == 0
    assert S.var(0, 1, 0, 0) == 1  # columns xx, xy, yx, yy
    assert S.var(0, 0, 0, 1) == 4  # rows 00, 01, 10, 11
    assert Atom(1, 0, 0, 1).label() == "[yx,01]"


def test_invalid_shape_rejected():
    with pytest.raises(ValueError):
        BoxShape(2, 1)


def test_constraint_rows_match_hand_written_list():
    poly = BoxPolytope(S)
    assert len(poly.normalization_rows) == 4
    # Alice's marginal for setting x, outcome 0 does not depend on Bob's setting, and so on
    hand = set()
    for a, alpha in itertools.product(range(2), repeat=2):
        c = [0] * 16
        for beta in range(2):
            c[S.var(a, 0, alpha, beta)] += 1
            c[S.var(a, 1, alpha, beta)] -= 1
        hand.add(tuple(c))
    for b, beta in itertools.product(range(2), repeat=2):
        c = [0] * 16
        for alpha in range(2):
            c[S.var(0, b, alpha, beta)] += 1
            c[S.var(1, b, alpha, beta)] -= 1
        hand.add(tuple(c))
    assert {tuple(int(x) for x in a) for a, _ in poly.no_signalling_rows} == hand
    assert poly.rank == 8


def test_vertices_are_local_plus_pr_boxes():
    poly = BoxPolytope(S)
    expected = {s.vector for s in classically_correlated_states()} | set(_pr_boxes())
    assert len(poly.vertices) == 24
    assert set(poly.vertices) == expected


def test_lp_agrees_with_vertex_maximum():
    poly = BoxPolytope(S)
    rng = random.Random(7)
    for _ in range(100):
        c = [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(16)]
        assert poly.maximize(c) == poly.maximize(c, method="vertices")


def test_classical_states_are_valid_and_distinct():
    poly = BoxPolytope(S)
    states = classically_correlated_states()
    assert len({s.vector for s in states}) == 16
    assert all(poly.contains(s) and s.is_two_valued() for s in states)
    s = classically_correlated_state(1, 0, 0, 1)
    assert s.prob(1, 0, 1, 1) == 1 and s.prob(0, 0, 0, 1) == 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=24, max_size=24).filter(any))
def test_mixtures_of_vertices_stay_inside(weights):
    poly = BoxPolytope(S)
    total = sum(weights)
    state = mixture([BoxState.from_vector(S, v) for v in poly.vertices], [Fraction(w, total) for w in weights])
    assert poly.contains(state)


def test_state_json_roundtrip_and_uniform():
    u = uniform_state(S)
    assert BoxState.from_json(u.to_json()) == u
    assert u.to_json()["matrix"][0] == ["1/4"] * 4


def test_question_subset_first_case():
    sub = question_subset(Atom(0, 0, 0, 0))
    assert sub == {p for p in GAMMA if p.a == 0 and p.c == 0}
    assert len(sub) == 4
    with pytest.raises(UnsupportedShape):
        question_subset(Atom(2, 0, 0, 0))


def test_phi_sends_point_masses_to_classical_states():
    images = {phi(ClassicalMeasure.point_mass(p)).vector for p in GAMMA}
    assert images == {s.vector for s in classically_correlated_states()}


def test_measure_validation():
    with pytest.raises(ValueError):
        ClassicalMeasure.from_dict({(0, 0, 0, 0): Fraction(1, 2)})


def test_phi_preimage_pair_of_mixed_image():
    image = mixture(classically_correlated_states()[:2], [Fraction(1, 2)] * 2)
    mu_a, mu_b = phi_preimage_pair(image)
    assert mu_a != mu_b and phi(mu_a) == phi(mu_b) == image


def test_phi_is_injective_on_point_masses():
    with pytest.raises(ValueError):
        phi_preimage_pair(classically_correlated_states()[0])
