import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxlogic.boxworld import BoxShape, BoxState, classically_correlated_states, mixture, uniform_state
from boxlogic.exactmath import verify_certificate
from boxlogic.logic import NoJoin, lattice_failures
from boxlogic.reference import expected
from boxlogic.states import (
    NoWitnessFound,
    Observable,
    ZeroConditioningProbability,
    check_richness,
    enumerate_two_valued,
    expectation,
    heisenberg_witness,
    is_conditional,
    is_two_valued_on,
    join_feasibility_system,
    no_affine_join,
    richness_report,
    ucp_witness,
    variance,
    verify_embedding_proof,
    verify_state_axiom_equivalence,
)


def _state(m):
    return BoxState.from_json({"shape": [2, 2], "matrix": m})


def test_state_axioms_match_constraints(poset22):
    rep = verify_state_axiom_equivalence(poset22)
    assert rep.equivalent and rep.identity_rank == rep.constraint_rank == 8
    assert rep.pair_counts["unordered_distinct"] == 289
    assert rep.matched_conventions == ["unordered_distinct"]


def test_state_axioms_single_column(poset12):
    rep = verify_state_axiom_equivalence(poset12)
    assert rep.equivalent and rep.identity_rank == 1


def test_two_valued_states_brute_force(poly22, two_valued22):
    found = set()
    for bits in itertools.product((0, 1), repeat=16):
        if poly22.system.is_satisfied_by(bits):
            found.add(tuple(Fraction(b) for b in bits))
    assert found == {s.vector for s in two_valued22}
    assert len(two_valued22) == 16
    assert found == {s.vector for s in classically_correlated_states()}


def test_two_valued_single_column(poset12):
    states = enumerate_two_valued(poset12.questions.algebra.polytope)
    assert len(states) == 4


def test_two_valued_on_every_question(poset22, two_valued22):
    assert all(is_two_valued_on(poset22, s) for s in two_valued22)
    assert not is_two_valued_on(poset22, uniform_state(BoxShape(2, 2)))


def test_two_valued_are_the_integer_vertices(poly22, two_valued22):
    integral = {v for v in poly22.vertices if all(x.denominator == 1 for x in v)}
    assert integral == {s.vector for s in two_valued22}


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=24, max_size=24).filter(any))
def test_states_give_probabilities_and_are_additive(poset22, poly22, weights):
    total = sum(weights)
    rho = mixture([BoxState.from_vector(poly22.shape, v) for v in poly22.vertices],
                  [Fraction(w, total) for w in weights])
    qs = poset22.questions
    vals = [q.prob(rho) for q in qs]
    assert all(0 <= v <= 1 for v in vals)
    assert vals[poset22.zero] == 0 and vals[poset22.one] == 1
    for i, j in [(1, 2), (1, 3), (5, 6)]:
        if poset22.orthogonal(i, j):
            s = qs.index(qs.algebra.osum([qs[i], qs[j]]))
            assert vals[s] == vals[i] + vals[j]


def test_richness_variants(poset22, two_valued22):
    rep = richness_report(poset22, two_valued22)
    assert rep["order_determining"] is True
    assert rep["literal"] is False and "note" in rep
    assert not check_richness(poset22, [uniform_state(BoxShape(2, 2))])
    with pytest.raises(ValueError):
        check_richness(poset22, two_valued22, "other")


def test_reference_ucp_witness(poset22):
    ref = expected("ucp_witness")
    rho, s1, s2 = _state(ref["rho"]), _state(ref["sigma1"]), _state(ref["sigma2"])
    q = poset22.questions.find(ref["q"])
    assert is_conditional(s1, rho, q, poset22)
    assert is_conditional(s2, rho, q, poset22)
    assert s1 != s2


def test_conditioning_on_one_and_on_null_question(poset22):
    rho = uniform_state(BoxShape(2, 2))
    assert is_conditional(rho, rho, poset22.one, poset22)
    ref = expected("ucp_witness")
    with pytest.raises(ZeroConditioningProbability):
        is_conditional(_state(ref["sigma1"]), _state(ref["rho"]), "[yy,00]", poset22)


def test_invalid_candidate_is_not_conditional(poset22):
    rho = uniform_state(BoxShape(2, 2))
    bad = BoxState.from_vector(BoxShape(2, 2), [2] + [0] * 15)
    assert not is_conditional(bad, rho, poset22.one, poset22)


def test_ucp_witness_default_and_search(poset22):
    w = ucp_witness(poset22)
    assert w.q.label == "[xx,00]+[xx,01]" and w.sigma1 != w.sigma2
    found = ucp_witness(poset22, search=True)
    assert is_conditional(found.sigma1, found.rho, found.q, poset22)
    assert is_conditional(found.sigma2, found.rho, found.q, poset22)
    assert found.sigma1 != found.sigma2


def test_single_column_has_unique_conditionals(poset12):
    with pytest.raises(NoWitnessFound):
        ucp_witness(poset12)


def test_observable_validation(qs22):
    q = qs22.find("[xx,00]")
    with pytest.raises(ValueError):
        Observable(((1, q), (2, q)))
    with pytest.raises(ValueError):
        Observable(((1, q), (1, qs22.algebra.complement(q))))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 81), st.lists(st.integers(0, 4), min_size=16, max_size=16).filter(any))
def test_bernoulli_moments(qs22, idx, weights):
    q = qs22[idx]
    total = sum(weights)
    rho = mixture(classically_correlated_states(), [Fraction(w, total) for w in weights])
    x = Observable.indicator(q) if q != qs22.algebra.zero and q != qs22.algebra.one else None
    if x is None:
        return
    p = q.prob(rho)
    assert expectation(x, rho) == p
    assert variance(x, rho) == p * (1 - p)


def test_uniform_moments_and_zero_variance_on_two_valued(qs22, two_valued22):
    x = Observable.indicator(qs22.find("[xx,10]+[xx,11]"))
    u = uniform_state(BoxShape(2, 2))
    assert expectation(x, u) == Fraction(1, 2) and variance(x, u) == Fraction(1, 4)
    three = Observable(((0, qs22.find("[xx,00]")), (5, qs22.find("[xx,01]")),
                        (-1, qs22.find("[xx,10]+[xx,11]"))))
    assert all(variance(three, s) == 0 for s in two_valued22)


def test_heisenberg_witness(qs22, two_valued22):
    x = Observable.indicator(qs22.find("[xx,10]+[xx,11]"))
    y = Observable.indicator(qs22.find("[yx,10]+[yx,11]"))
    for a, b in [(x, y), (x, x)]:
        s = heisenberg_witness(a, b, two_valued22)
        assert variance(a, s) * variance(b, s) == 0 < Fraction(1, 10 ** 6)


def test_no_affine_join_for_xx11_and_yy11(poset22):
    v = no_affine_join("[xx,11]", "[yy,11]", poset22)
    assert v.verdict == "infeasible" and v.verified()
    assert verify_certificate(v.system.system, v.farkas)
    assert v.to_json()["verdict"] == "infeasible"
    assert v.system.n_vars == 17


def test_no_affine_join_feasible_for_existing_join(poset22, qs22):
    v = no_affine_join("[xx,00]", "[xx,01]", poset22, method="lp")
    s = qs22.find("[xx,00]+[xx,01]")
    assert v.verdict == "feasible"
    assert v.functional == s.coeffs + (s.constant,)
    assert v.to_json()["functional"][-1] == "0"


def test_all_joinless_pairs_are_infeasible(poset22):
    for i, j in lattice_failures(poset22):
        v = no_affine_join(i, j, poset22)
        assert v.verdict == "infeasible" and v.verified()


def test_lp_agrees_with_join_shortcut_on_sample(poset22):
    n = len(poset22)
    pairs = [(i, j) for i in range(1, n, 7) for j in range(2, n, 11) if isinstance(poset22.join(i, j), int)]
    for i, j in pairs:
        assert no_affine_join(i, j, poset22, method="lp").verdict == "feasible"
        sys_ = join_feasibility_system(i, j, poset22).system
        assert sys_.is_satisfied_by(no_affine_join(i, j, poset22).functional)


def test_feasible_wherever_join_exists(poset22):
    n = len(poset22)
    for i in range(n):
        for j in range(i, n):
            if not isinstance(poset22.join(i, j), NoJoin):
                assert no_affine_join(i, j, poset22).verdict == "feasible"


def test_embedding_proof_replay(poset22, two_valued22):
    rep = verify_embedding_proof(poset22, two_valued22)
    assert rep.ok, [s for s in rep.failures()]
    steps = {s.name: s for s in rep.steps}
    assert steps["join value forced at rho0"].computed == 0
    assert steps["local mixing interval"].computed == (Fraction(1, 4), Fraction(3, 4))
