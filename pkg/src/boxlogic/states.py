"""States as probability assignments on the logic.

Covers the equivalence between additivity on the logic and the linear
state constraints, two-valued states, richness, conditional states,
observables, and the affine-join feasibility test behind the
non-embeddability result.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .boxworld import BoxPolytope, BoxShape, BoxState, mixture, uniform_state
from .exactmath import (
    FarkasCertificate,
    LinearSystem,
    format_rational,
    in_row_space,
    lp_feasible,
    lp_maximize,
    row_space_rank,
    verify_certificate,
)
from .logic import LogicPoset, NoJoin
from .questions import Atom, Complement, Expr, One, OSum, Question, Zero
from .reference import expected

log = logging.getLogger(__name__)

TwoValuedState = BoxState


class ZeroConditioningProbability(ValueError):
    pass


class NoWitnessFound(RuntimeError):
    pass


def _needs_questions(poset: LogicPoset) -> list[Question]:
    if poset.questions is None:
        raise ValueError("this operation evaluates probabilities and needs the questions behind the poset")
    return list(poset.questions)


def _polytope(poset: LogicPoset, polytope: Optional[BoxPolytope]) -> BoxPolytope:
    if polytope is not None:
        return polytope
    if poset.questions is not None:
        return poset.questions.algebra.polytope
    return BoxPolytope(poset.shape)


# ---------------------------------------------------------------------------
# Additivity versus the state constraints


def raw_functional(shape: BoxShape, expr: Expr) -> tuple[Fraction, ...]:
    """Coefficients and constant ``(c_1, ..., c_N, k)`` read off an expression, with no simplification."""
    n = shape.n_vars
    if isinstance(expr, Zero):
        return (Fraction(0),) * (n + 1)
    if isinstance(expr, One):
        return (Fraction(0),) * n + (Fraction(1),)
    if isinstance(expr, Atom):
        v = [Fraction(0)] * (n + 1)
        v[shape.var(*expr)] = Fraction(1)
        return tuple(v)
    if isinstance(expr, Complement):
        inner = raw_functional(shape, expr.inner)
        return tuple(-x for x in inner[:-1]) + (1 - inner[-1],)
    if isinstance(expr, OSum):
        parts = [raw_functional(shape, t) for t in expr.terms]
        return tuple(sum(col, Fraction(0)) for col in zip(*parts))
    raise TypeError(f"not a question expression: {expr!r}")


@dataclass
class StateAxiomReport:
    identity_rank: int
    constraint_rank: int
    identities_in_constraints: bool
    constraints_in_identities: bool
    pair_counts: dict
    matched_conventions: list
    expected_pairs: int

    @property
    def equivalent(self) -> bool:
        return (self.identities_in_constraints and self.constraints_in_identities
                and self.identity_rank == self.constraint_rank)


def disjoint_pair_counts(poset: LogicPoset) -> dict:
    n, z = len(poset), poset.zero
    ordered = [(i, j) for i in range(n) for j in range(n) if poset.orthogonal(i, j)]
    return {
        "unordered_distinct": sum(1 for i, j in ordered if i < j),
        "unordered_with_repeats": sum(1 for i, j in ordered if i <= j),
        "ordered_distinct": sum(1 for i, j in ordered if i != j),
        "ordered_with_repeats": len(ordered),
        "unordered_distinct_without_zero": sum(1 for i, j in ordered if i < j and z not in (i, j)),
    }


def verify_state_axiom_equivalence(poset: LogicPoset, polytope: Optional[BoxPolytope] = None,
                                   expected_pairs: Optional[int] = None) -> StateAxiomReport:
    """Compare the identities ``p(q + r) = p(q) + p(r)``, ``p(1) = 1`` and
    ``p(q^c) = 1 - p(q)`` with the normalization and no-signalling rows.

    Each identity becomes an affine row over the raw functional of each
    element's representative expression, so an identity carries content
    exactly when representatives of the same element differ.
    """
    questions = _needs_questions(poset)
    polytope = _polytope(poset, polytope)
    shape = polytope.shape
    raw = [raw_functional(shape, q.expr) for q in questions]
    one = (Fraction(0),) * shape.n_vars + (Fraction(1),)
    algebra = poset.questions.algebra
    rows = [tuple(a - b for a, b in zip(raw[poset.one], one))]
    n = len(poset)
    for i in range(n):
        rows.append(tuple(a + b - c for a, b, c in zip(raw[i], raw[poset.complement[i]], one)))
    for i in range(n):
        for j in range(i + 1, n):
            if not poset.orthogonal(i, j):
                continue
            s = poset.questions.index(algebra.osum([questions[i], questions[j]]))
            rows.append(tuple(a - b - c for a, b, c in zip(raw[s], raw[i], raw[j])))
    rows = [r for r in rows if any(r)]
    constraints = polytope.affine_rows
    counts = disjoint_pair_counts(poset)
    if expected_pairs is None and shape == BoxShape(2, 2):
        expected_pairs = expected("disjoint_pairs")
    return StateAxiomReport(
        identity_rank=row_space_rank(rows),
        constraint_rank=polytope.rank,
        identities_in_constraints=all(in_row_space(r, constraints) for r in rows),
        constraints_in_identities=all(in_row_space(r, rows) for r in constraints),
        pair_counts=counts,
        matched_conventions=[k for k, v in counts.items() if v == expected_pairs],
        expected_pairs=expected_pairs,
    )


# ---------------------------------------------------------------------------
# Two-valued states and richness


def enumerate_two_valued(polytope: BoxPolytope) -> list[BoxState]:
    """All 0/1 states: one 1 per column, then the no-signalling rows decide."""
    shape = polytope.shape
    found = []
    for choice in itertools.product(range(shape.n_rows), repeat=shape.n_cols):
        vec = [Fraction(0)] * shape.n_vars
        for col, row in enumerate(choice):
            vec[row * shape.n_cols + col] = Fraction(1)
        if polytope.system.is_satisfied_by(vec):
            found.append(BoxState.from_vector(shape, vec))
    found.sort(key=lambda s: s.vector, reverse=True)
    return found


def is_two_valued_on(poset: LogicPoset, state: BoxState) -> bool:
    return all(q.prob(state) in (0, 1) for q in _needs_questions(poset))


def check_richness(poset: LogicPoset, states: Sequence[BoxState], variant: str = "order_determining") -> bool:
    """``literal``: every orthogonal pair ``(p, q)`` has a state with ``s(p) = 1`` and ``s(q) > 0``.
    ``order_determining``: whenever ``p`` is not below ``q`` some state has ``s(p) = 1`` and ``s(q) = 0``.
    """
    questions = _needs_questions(poset)
    values = [[q.prob(s) for s in states] for q in questions]
    n = len(poset)
    if variant == "literal":
        return all(
            any(vp == 1 and vq > 0 for vp, vq in zip(values[i], values[j]))
            for i in range(n) for j in range(n) if i != j and poset.orthogonal(i, j)
        )
    if variant == "order_determining":
        return all(
            any(vp == 1 and vq == 0 for vp, vq in zip(values[i], values[j]))
            for i in range(n) for j in range(n) if not poset.order[i][j]
        )
    raise ValueError(f"unknown richness variant {variant!r}")


def richness_report(poset: LogicPoset, states: Sequence[BoxState]) -> dict:
    out = {v: check_richness(poset, states, v) for v in ("literal", "order_determining")}
    if not out["literal"]:
        out["note"] = ("literal reading fails for any orthogonal pair: s(p) = 1 forces s(q) <= s(p^c) = 0")
    return out


# ---------------------------------------------------------------------------
# Conditional states


def is_conditional(candidate: BoxState, rho: BoxState, q: Union[Question, str, int], poset: LogicPoset,
                   polytope: Optional[BoxPolytope] = None) -> bool:
    """``p(r, candidate) = p(r, rho) / p(q, rho)`` for every ``r <= q``."""
    questions = _needs_questions(poset)
    qi = poset.index(q)
    pq = questions[qi].prob(rho)
    if pq == 0:
        raise ZeroConditioningProbability(f"p({questions[qi]}, rho) = 0")
    if not _polytope(poset, polytope).contains(candidate):
        return False
    return all(questions[r].prob(candidate) == questions[r].prob(rho) / pq
               for r in range(len(poset)) if poset.order[r][qi])


@dataclass(frozen=True)
class UCPWitness:
    q: Question
    rho: BoxState
    sigma1: BoxState
    sigma2: BoxState


def _reference_witness(poset: LogicPoset) -> Optional[UCPWitness]:
    ref = expected("ucp_witness")
    shape = BoxShape(2, 2)
    q = poset.questions.find(ref["q"])
    states = [BoxState.from_json({"shape": [2, 2], "matrix": ref[k]}) for k in ("rho", "sigma1", "sigma2")]
    w = UCPWitness(q, *states)
    return w if _valid_witness(poset, w, BoxPolytope(shape)) else None


def _valid_witness(poset, w: UCPWitness, polytope) -> bool:
    return (polytope.contains(w.rho) and w.sigma1 != w.sigma2
            and is_conditional(w.sigma1, w.rho, w.q, poset, polytope)
            and is_conditional(w.sigma2, w.rho, w.q, poset, polytope))


def ucp_witness(poset: LogicPoset, polytope: Optional[BoxPolytope] = None, search: bool = False) -> UCPWitness:
    """Two different conditional states of one state under one question.

    For the (2,2) world the pinned witness is validated and returned; with
    ``search=True`` (or for other shapes) each question is tried against
    the uniform state, looking for a coordinate that is not fixed on the
    polytope of conditional states.
    """
    questions = _needs_questions(poset)
    polytope = _polytope(poset, polytope)
    if not search and polytope.shape == BoxShape(2, 2):
        w = _reference_witness(poset)
        if w is not None:
            return w
        log.warning("pinned witness failed validation; searching")
    rho = uniform_state(polytope.shape)
    for qi, q in enumerate(questions):
        pq = q.prob(rho)
        if pq == 0:
            continue
        eqs = [(r.coeffs, r.prob(rho) / pq - r.constant)
               for ri, r in enumerate(questions) if poset.order[ri][qi]]
        system = polytope.system.with_rows(eq_rows=eqs)
        for k in range(polytope.n_vars):
            unit = [0] * polytope.n_vars
            unit[k] = 1
            hi = lp_maximize(unit, system)
            if hi.status != "optimal":
                break
            lo = lp_maximize([-u for u in unit], system)
            if hi.optimum != -lo.optimum:
                s1 = BoxState.from_vector(polytope.shape, hi.optimizer)
                s2 = BoxState.from_vector(polytope.shape, lo.optimizer)
                w = UCPWitness(q, rho, s1, s2)
                if _valid_witness(poset, w, polytope):
                    return w
    raise NoWitnessFound(f"every question has a unique conditional of the uniform state in {polytope.shape}")


# ---------------------------------------------------------------------------
# Observables


@dataclass(frozen=True)
class Observable:
    """Finitely many values, each attached to a question; the questions partition 1."""

    outcomes: tuple

    def __post_init__(self):
        outs = tuple((Fraction(v), q) for v, q in self.outcomes)
        object.__setattr__(self, "outcomes", outs)
        values = [v for v, _ in outs]
        if len(set(values)) != len(values):
            raise ValueError("observable values must be distinct")
        qs = [q for _, q in outs]
        if not qs:
            raise ValueError("observable needs at least one outcome")
        algebra = qs[0].algebra
        total = algebra.osum(qs)  # raises NotOrthogonal
        if total.key != algebra.one.key:
            raise ValueError("observable questions must add up to 1")

    @classmethod
    def indicator(cls, q: Question) -> "Observable":
        return cls(((1, q), (0, q.algebra.complement(q))))


def expectation(x: Observable, rho: BoxState) -> Fraction:
    return sum((v * q.prob(rho) for v, q in x.outcomes), Fraction(0))


def variance(x: Observable, rho: BoxState) -> Fraction:
    m = expectation(x, rho)
    return sum(((v - m) ** 2 * q.prob(rho) for v, q in x.outcomes), Fraction(0))


def heisenberg_witness(x: Observable, y: Observable, two_valued_states: Sequence[BoxState]) -> BoxState:
    """A state on which the product of the two variances is zero."""
    for s in two_valued_states:
        if variance(x, s) * variance(y, s) == 0:
            return s
    raise NoWitnessFound("no listed state has a vanishing variance product")


# ---------------------------------------------------------------------------
# Affine joins


@dataclass(frozen=True)
class JoinFeasibilitySystem:
    """Unknown affine functional ``j = c . x + k`` (``c`` then ``k``, all free).

    At every vertex ``v``: ``j(v) >= p(q1, v)``, ``j(v) >= p(q2, v)`` and
    ``j(v) <= p(u, v)`` for each minimal upper bound ``u``.
    """

    q1: Question
    q2: Question
    bounds: tuple
    system: LinearSystem
    row_labels: tuple

    @property
    def n_vars(self) -> int:
        return self.system.n_vars


@dataclass(frozen=True)
class Feasible:
    functional: tuple

    verdict = "feasible"

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "functional": [format_rational(v) for v in self.functional]}


@dataclass(frozen=True)
class Infeasible:
    farkas: FarkasCertificate
    system: JoinFeasibilitySystem = field(repr=False)

    verdict = "infeasible"

    def verified(self) -> bool:
        return verify_certificate(self.system.system, self.farkas)

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "farkas": [format_rational(v) for v in self.farkas.eq + self.farkas.le]}


def _vertex_values(poset: LogicPoset, polytope: BoxPolytope) -> list[tuple[Fraction, ...]]:
    cache = poset.__dict__.setdefault("_vertex_values", {})
    if polytope.shape not in cache:
        verts = polytope.vertices
        cache[polytope.shape] = [tuple(q.prob(v) for v in verts) for q in _needs_questions(poset)]
    return cache[polytope.shape]


def join_feasibility_system(q1, q2, poset: LogicPoset, polytope: Optional[BoxPolytope] = None) -> JoinFeasibilitySystem:
    questions = _needs_questions(poset)
    polytope = _polytope(poset, polytope)
    values = _vertex_values(poset, polytope)
    i1, i2 = poset.index(q1), poset.index(q2)
    bounds = tuple(sorted(poset.minimal_upper_bounds(i1, i2)))
    rows, labels = [], []
    for vi, v in enumerate(polytope.vertices):
        point = tuple(v) + (Fraction(1),)
        neg = tuple(-x for x in point)
        for lo in (i1, i2):
            rows.append((neg, -values[lo][vi]))
            labels.append((vi, "lower", poset.labels[lo]))
        for u in bounds:
            rows.append((point, values[u][vi]))
            labels.append((vi, "upper", poset.labels[u]))
    system = LinearSystem(polytope.n_vars + 1, le_rows=tuple(rows), nonneg=(False,) * (polytope.n_vars + 1))
    return JoinFeasibilitySystem(questions[i1], questions[i2], bounds, system, tuple(labels))


def no_affine_join(q1, q2, poset: LogicPoset, polytope: Optional[BoxPolytope] = None,
                   method: str = "auto") -> Union[Feasible, Infeasible]:
    """Is there an affine functional squeezed between ``q1, q2`` and their minimal upper bounds?

    With ``method="auto"`` an existing poset join is tried as the witness
    first and the LP runs only if it does not satisfy the system;
    ``method="lp"`` always solves the LP.
    """
    if method not in ("auto", "lp"):
        raise ValueError(f"unknown method {method!r}")
    polytope = _polytope(poset, polytope)
    j = poset.join(q1, q2)
    if method == "auto" and not isinstance(j, NoJoin):
        # the join's own functional, checked against the same vertex bounds the system encodes
        values = _vertex_values(poset, polytope)
        lo1, lo2, top = values[poset.index(q1)], values[poset.index(q2)], values[j]
        if all(a <= t and b <= t for a, b, t in zip(lo1, lo2, top)):
            q = poset.questions[j]
            return Feasible(q.coeffs + (q.constant,))
    jfs = join_feasibility_system(q1, q2, poset, polytope)
    res = lp_feasible(jfs.system)
    if res.feasible:
        if not isinstance(j, NoJoin):
            q = poset.questions[j]
            candidate = q.coeffs + (q.constant,)
            if jfs.system.is_satisfied_by(candidate):
                return Feasible(candidate)
        return Feasible(tuple(res.optimizer))
    return Infeasible(res.certificate, jfs)


# ---------------------------------------------------------------------------
# Replay of the non-embeddability argument


@dataclass
class ProofStep:
    name: str
    expected: object
    computed: object
    ok: bool


@dataclass
class ProofReport:
    steps: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.steps) and all(s.ok for s in self.steps)

    def add(self, name, exp, got, ok=None):
        self.steps.append(ProofStep(name, exp, got, exp == got if ok is None else ok))

    def failures(self) -> list:
        return [s for s in self.steps if not s.ok]


def _state(matrix) -> BoxState:
    return BoxState.from_json({"shape": [2, 2], "matrix": matrix})


def local_mixing_interval(rho1: BoxState, rho0: BoxState, local_states: Sequence[BoxState]) -> tuple[Fraction, Fraction]:
    """Range of ``lam`` for which ``lam*rho1 + (1-lam)*rho0`` is a convex mixture of ``local_states``."""
    m = len(local_states)
    n = rho1.shape.n_vars
    eqs = []
    for k in range(n):
        coeffs = [s.vector[k] for s in local_states] + [-(rho1.vector[k] - rho0.vector[k])]
        eqs.append((coeffs, rho0.vector[k]))
    eqs.append(([1] * m + [0], 1))
    system = LinearSystem(m + 1, tuple(eqs), le_rows=(([0] * m + [1], 1),))
    hi = lp_maximize([0] * m + [1], system)
    lo = lp_maximize([0] * m + [-1], system)
    if hi.status != "optimal":
        raise ValueError("no mixture of the two states is local")
    return -lo.optimum, hi.optimum


def verify_embedding_proof(poset: LogicPoset, two_valued: Optional[Sequence[BoxState]] = None) -> ProofReport:
    """Re-derive every arithmetic step of the argument for the pinned pair."""
    ref = expected("embedding_proof")
    rep = ProofReport()
    qs = poset.questions
    polytope = _polytope(poset, None)
    q1, q2 = qs.find(ref["q1"]), qs.find(ref["q2"])
    r1, r2 = qs.find(ref["r1"]), qs.find(ref["r2"])
    bounds = {poset.labels[i] for i in poset.minimal_upper_bounds(q1, q2)}
    rep.add("minimal upper bounds", {poset.labels[qs.index(r1)], poset.labels[qs.index(r2)]}, bounds)

    def window(state):
        return max(q1.prob(state), q2.prob(state)), min(r1.prob(state), r2.prob(state))

    rho1, rho0 = _state(ref["rho1"]), _state(ref["rho0"])
    rep.add("rho1 is a state", True, polytope.contains(rho1))
    rep.add("rho0 is a state", True, polytope.contains(rho0))
    lo1, hi1 = window(rho1)
    p1 = Fraction(ref["p_join_rho1"])
    rep.add("join value at rho1 is forced", (p1, p1), (lo1, hi1))
    rep.add("join bounds at rho0", tuple(Fraction(v) for v in ref["p_join_rho0_bounds"]), window(rho0))

    if two_valued is None:
        two_valued = enumerate_two_valued(polytope)
    rep.add("local mixing interval", tuple(Fraction(v) for v in ref["lambda_range"]),
            local_mixing_interval(rho1, rho0, two_valued))

    lam = Fraction(ref["lambda"])
    rho_lam = rho1.mix(lam, rho0)
    sigmas = [_state(m) for m in ref["sigma"]]
    w = Fraction(ref["sigma_weight"])
    rep.add("rho_lambda is the uniform mixture of sigma_i", rho_lam, mixture(sigmas, [w] * len(sigmas)))
    tv = {s.vector for s in two_valued}
    rep.add("each sigma_i is two-valued", [True] * len(sigmas), [s.vector in tv for s in sigmas])

    forced_one = [k + 1 for k, s in enumerate(sigmas) if window(s)[0] == 1]
    forced_zero = [k + 1 for k, s in enumerate(sigmas) if window(s)[1] == 0]
    rep.add("join forced to 1", ref["forced_one"], forced_one)
    rep.add("join forced to 0", ref["forced_zero"], forced_zero)
    rep.add("every sigma_i forced", len(sigmas), len(forced_one) + len(forced_zero))
    p_lam = w * len(forced_one)
    rep.add("join value at rho_lambda", Fraction(ref["p_join_rho_lambda"]), p_lam)
    # affinity: lam * p(rho1) + (1 - lam) * p(rho0) = p(rho_lam)
    p0 = (p_lam - lam * p1) / (1 - lam)
    rep.add("join value forced at rho0", Fraction(ref["p_join_rho0_forced"]), p0)
    lo0, _ = window(rho0)
    rep.add("contradiction with lower bound at rho0", True, p0 < lo0)
    verdict = no_affine_join(q1, q2, poset, polytope)
    rep.add("affine join system", "infeasible", verdict.verdict,
            ok=verdict.verdict == "infeasible" and verdict.verified())
    return rep
