"""Acceptance criteria 1 to 15 for the (2,2) box world, one test per criterion."""

import pytest

from boxlogic.boxworld import BoxShape, BoxState, phi, phi_preimage_pair
from boxlogic.logic import concrete_representation, lattice_failures, minimal_upper_bounds, verify_orthostructure
from boxlogic.reference import expected
from boxlogic.report import Context, run_checks
from boxlogic.states import no_affine_join, richness_report

from conftest import CRITERIA


@pytest.fixture(scope="module")
def report(poset22):
    rep = run_checks(Context(BoxShape(2, 2), poset22))
    return {c.name: c for c in rep.checks}


def _record(n, ok):
    CRITERIA[n] = CRITERIA.get(n, True) and bool(ok)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}")
    assert ok


def test_report_lists_every_check_once(report):
    assert len(report) == 15


def test_criterion_01_question_count(report, qs22):
    _record(1, report["question-count"].passed and len(qs22) == 82)


def test_criterion_02_atoms(report, poset22):
    atoms = {poset22.labels[i] for i in poset22.atoms}
    _record(2, report["atoms"].passed and len(atoms) == 16 and all("+" not in a for a in atoms))


def test_criterion_03_sum_inventory(report, qs22):
    sums = expected("two_atom_sums")
    keys = {qs22.algebra.from_expr(s).key for s in sums}
    _record(3, report["sum-inventory"].passed and len(keys) == 48
            and all(k in qs22._index for k in keys))


def test_criterion_04_covering_table(report):
    _record(4, report["covering-table"].passed)


def test_criterion_05_non_lattice(report, poset22):
    bounds = poset22.label_set(minimal_upper_bounds(poset22, "[xx,11]", "[yy,11]"))
    ok = (report["non-lattice"].passed and len(lattice_failures(poset22)) == 32
          and len(lattice_failures(poset22, "meet")) == 32
          and bounds == ["[xy,00]^c", "[yx,00]^c"])
    _record(5, ok)


def test_criterion_06_orthostructure(report, poset22):
    rep = verify_orthostructure(poset22)
    _record(6, report["orthostructure"].passed and rep.ok and rep.orthomodular)


def test_criterion_07_compatibility(report):
    _record(7, report["compatibility"].passed)


def test_criterion_08_state_equivalence(report):
    computed = report["state-equivalence"].computed
    _record(8, report["state-equivalence"].passed and computed["identity_rank"] == computed["constraint_rank"] == 8)


def test_criterion_09_two_valued_states(report, two_valued22):
    _record(9, report["two-valued-states"].passed and len(two_valued22) == 16)


def test_criterion_10_set_representability(report, poset22, two_valued22):
    logic = concrete_representation(poset22, two_valued22)
    ok = (report["set-representability"].passed
          and richness_report(poset22, two_valued22)["order_determining"]
          and logic.check_closure() == [])
    _record(10, ok)


def test_criterion_11_ucp_failure(report):
    _record(11, report["ucp-failure"].passed)


def test_criterion_12_phi_non_injective(report):
    ref = expected("phi_non_injective")
    image = BoxState.from_json({"shape": [2, 2], "matrix": ref["image"]})
    a, b = phi_preimage_pair(image)
    _record(12, report["phi-non-injective"].passed and a != b and phi(a) == phi(b) == image)


@pytest.mark.xfail(strict=True, reason="the pinned measure pair has distinct images, neither equal to the "
                                        "pinned image; see README, known discrepancy")
def test_criterion_12_pinned_measure_pair_literal(report):
    computed = report["phi-non-injective"].computed
    assert computed["reference_pair_images_equal"] and computed["reference_pair_matches_image"]


def test_criterion_13_embedding_theorem(report, poset22):
    v = no_affine_join("[xx,11]", "[yy,11]", poset22)
    _record(13, report["embedding-theorem"].passed and v.verdict == "infeasible" and v.verified())


def test_criterion_14_heisenberg_failure(report):
    _record(14, report["heisenberg-failure"].passed and report["heisenberg-failure"].computed == 0)


def test_criterion_15_oracle_cross_checks(report):
    _record(15, report["oracle-cross-checks"].passed)
