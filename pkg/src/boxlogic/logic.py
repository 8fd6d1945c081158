"""Order-theoretic analysis of a finite logic of questions.

:class:`LogicPoset` is purely combinatorial (element labels, order
matrix, complement map) with the generating questions attached when
they are known. Order relations are stored as integer bitsets so bound
computations are a few bitwise operations.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .boxworld import GAMMA, Atom, BoxShape, BoxState, ClassicalMeasure, phi, question_subset
from .exactmath import parse_rational
from .questions import Question, QuestionAlgebra, QuestionSet, parse_expr

log = logging.getLogger(__name__)

COUNTING_CONVENTION = "all distinct questions, including 0 and 1"


def _bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class NotSetRepresentable(ValueError):
    pass


@dataclass(frozen=True)
class NoJoin:
    """Join is missing: the common upper bounds have several minimal elements."""

    bounds: frozenset


@dataclass(frozen=True)
class NoMeet:
    bounds: frozenset


Elem = Union[int, str, Question]


class LogicPoset:
    """A finite orthoposet.

    ``order[i][j]`` means element ``i <= j``. ``complement[i]`` is the index
    of the complement of ``i``. ``questions`` is the generating
    :class:`QuestionSet` when available (needed for anything that evaluates
    probabilities).
    """

    def __init__(self, labels: Sequence[str], order: Sequence[Sequence[bool]], complement: Sequence[int],
                 questions: Optional[QuestionSet] = None, shape: Optional[BoxShape] = None):
        n = len(labels)
        if len(order) != n or any(len(row) != n for row in order) or len(complement) != n:
            raise ValueError("order matrix and complement map must match the element count")
        self.labels = list(labels)
        self.order = [[bool(v) for v in row] for row in order]
        self.complement = list(complement)
        self.questions = questions
        self.shape = shape if shape is not None else (questions.shape if questions is not None else None)
        self.up = [sum(1 << j for j in range(n) if self.order[i][j]) for i in range(n)]
        self.down = [sum(1 << j for j in range(n) if self.order[j][i]) for i in range(n)]
        self._label_index = {lab: i for i, lab in enumerate(self.labels)}
        self._join_cache: dict = {}
        self._meet_cache: dict = {}
        self._covers: Optional[list] = None
        # covering pairs as read from a file, checked against the order by verify_orthostructure
        self.declared_covers: Optional[list] = None

    def __len__(self):
        return len(self.labels)

    # -- lookups ------------------------------------------------------------

    def index(self, x: Elem) -> int:
        if isinstance(x, int):
            return x
        if isinstance(x, Question):
            if self.questions is None:
                return self._label_index[x.label]
            return self.questions.index(x)
        if x in self._label_index:
            return self._label_index[x]
        if self.questions is not None:
            return self.questions.index(x)
        raise KeyError(x)

    @property
    def zero(self) -> int:
        bottoms = [i for i in range(len(self)) if self.up[i] == (1 << len(self)) - 1]
        if len(bottoms) != 1:
            raise ValueError("poset has no unique least element")
        return bottoms[0]

    @property
    def one(self) -> int:
        tops = [i for i in range(len(self)) if self.down[i] == (1 << len(self)) - 1]
        if len(tops) != 1:
            raise ValueError("poset has no unique greatest element")
        return tops[0]

    def leq(self, a: Elem, b: Elem) -> bool:
        return self.order[self.index(a)][self.index(b)]

    def orthogonal(self, a: Elem, b: Elem) -> bool:
        return self.order[self.index(a)][self.complement[self.index(b)]]

    @property
    def covers(self) -> list[tuple[int, int]]:
        """Pairs ``(i, j)`` with ``j`` covering ``i``, sorted."""
        if self._covers is None:
            self._covers = transitive_reduction(self.order)
        return self._covers

    def covered_by(self, i: Elem) -> list[int]:
        i = self.index(i)
        return [j for a, j in self.covers if a == i]

    @property
    def atoms(self) -> list[int]:
        z = self.zero
        return [j for i, j in self.covers if i == z]

    # -- bounds -------------------------------------------------------------

    def _minimal(self, mask: int) -> frozenset:
        return frozenset(u for u in _bits(mask) if self.down[u] & mask == 1 << u)

    def _maximal(self, mask: int) -> frozenset:
        return frozenset(u for u in _bits(mask) if self.up[u] & mask == 1 << u)

    def minimal_upper_bounds(self, a: Elem, b: Elem) -> frozenset:
        return self._minimal(self.up[self.index(a)] & self.up[self.index(b)])

    def maximal_lower_bounds(self, a: Elem, b: Elem) -> frozenset:
        return self._maximal(self.down[self.index(a)] & self.down[self.index(b)])

    minimal_lower_bounds = maximal_lower_bounds

    def join(self, a: Elem, b: Elem) -> Union[int, NoJoin]:
        key = (self.index(a), self.index(b))
        hit = self._join_cache.get(key)
        if hit is None:
            bounds = self.minimal_upper_bounds(*key)
            hit = next(iter(bounds)) if len(bounds) == 1 else NoJoin(bounds)
            self._join_cache[key] = hit
        return hit

    def meet(self, a: Elem, b: Elem) -> Union[int, NoMeet]:
        key = (self.index(a), self.index(b))
        hit = self._meet_cache.get(key)
        if hit is None:
            bounds = self.maximal_lower_bounds(*key)
            hit = next(iter(bounds)) if len(bounds) == 1 else NoMeet(bounds)
            self._meet_cache[key] = hit
        return hit

    def label_set(self, idx: Iterable[int]) -> list[str]:
        return [self.labels[i] for i in sorted(idx)]

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        n = len(self)
        elements = []
        for i in range(n):
            if self.questions is not None:
                elements.append(self.questions[i].to_json())
            else:
                elements.append({"expr": self.labels[i]})
        return {
            "shape": [self.shape.inputs, self.shape.outputs] if self.shape else None,
            "counting_convention": COUNTING_CONVENTION,
            "element_count": n,
            "elements": elements,
            "order": [[i, j] for i in range(n) for j in range(n) if i != j and self.order[i][j]],
            "covers": [list(p) for p in self.covers],
            "complement": [[i, self.complement[i]] for i in range(n)],
            "atoms": self.atoms,
            "zero": self.zero,
            "one": self.one,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LogicPoset":
        """Rebuild from :meth:`to_json` output. The order is taken from the file, not recomputed."""
        n = len(data["elements"])
        order = [[i == j for j in range(n)] for i in range(n)]
        for i, j in data["order"]:
            order[i][j] = True
        comp = list(range(n))
        for i, j in data["complement"]:
            comp[i] = j
        shape = BoxShape(*data["shape"]) if data.get("shape") else None
        questions = None
        if shape is not None and all("c" in e for e in data["elements"]):
            algebra = QuestionAlgebra(shape)
            items = []
            for e in data["elements"]:
                c = [parse_rational(v) for v in e["c"]]
                k = parse_rational(e["k"])
                items.append(algebra._make(parse_expr(e["expr"]), c, k))
            questions = QuestionSet(algebra, items, sort=False)
            if len(questions) != n:
                raise ValueError("logic file lists duplicate questions")
        poset = cls([e["expr"] for e in data["elements"]], order, comp, questions=questions, shape=shape)
        if "covers" in data:
            poset.declared_covers = [tuple(p) for p in data["covers"]]
        return poset


def transitive_reduction(order: Sequence[Sequence[bool]]) -> list[tuple[int, int]]:
    """Covering pairs of a finite partial order, by pruning every pair that factors through a third element."""
    n = len(order)
    out = []
    for i in range(n):
        above = [j for j in range(n) if j != i and order[i][j]]
        for j in above:
            if not any(k != j and order[k][j] for k in above):
                out.append((i, j))
    return out


def transitive_closure(n: int, edges: Iterable[tuple[int, int]]) -> list[list[bool]]:
    reach = [[i == j for j in range(n)] for i in range(n)]
    for i, j in edges:
        reach[i][j] = True
    for k in range(n):
        rk = reach[k]
        for i in range(n):
            if reach[i][k]:
                ri = reach[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    return reach


def build_poset(questions: QuestionSet) -> LogicPoset:
    """Order matrix from the probability oracle and the complement map."""
    algebra = questions.algebra
    items = list(questions)
    n = len(items)
    if algebra.method == "simplex":
        algebra.maximize_many([tuple(x - y for x, y in zip(p.key, q.key)) for p in items for q in items])
    order = [[algebra.leq(p, q) for q in items] for p in items]
    comp = []
    for q in items:
        c = algebra.complement(q)
        if c not in questions:
            raise ValueError(f"question set is not closed under complement: {c} is missing")
        comp.append(questions.index(c))
    log.info("poset built: %d elements, %d order pairs", n, sum(map(sum, order)))
    return LogicPoset([q.label for q in items], order, comp, questions=questions)


def minimal_upper_bounds(poset: LogicPoset, q: Elem, r: Elem) -> frozenset:
    return poset.minimal_upper_bounds(q, r)


def minimal_lower_bounds(poset: LogicPoset, q: Elem, r: Elem) -> frozenset:
    return poset.maximal_lower_bounds(q, r)


def join(poset: LogicPoset, q: Elem, r: Elem):
    return poset.join(q, r)


def meet(poset: LogicPoset, q: Elem, r: Elem):
    return poset.meet(q, r)


def lattice_failures(poset: LogicPoset, kind: str = "join") -> list[tuple[int, int]]:
    """Unordered pairs ``(i, j)``, ``i < j``, whose join (or meet) does not exist."""
    op = {"join": poset.join, "meet": poset.meet}[kind]
    n = len(poset)
    return [(i, j) for i in range(n) for j in range(i + 1, n) if isinstance(op(i, j), (NoJoin, NoMeet))]


# ---------------------------------------------------------------------------
# Axiom checks


@dataclass
class OrthoReport:
    violations: dict = field(default_factory=dict)
    checked: dict = field(default_factory=dict)
    lattice: bool = False
    distributive: Optional[bool] = None

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    @property
    def orthomodular(self) -> bool:
        return self.ok

    @property
    def boolean(self) -> bool:
        return self.ok and self.lattice and bool(self.distributive)

    @property
    def conclusion(self) -> str:
        if not self.ok:
            return "not an orthomodular poset"
        if self.boolean:
            return "Boolean algebra"
        if self.lattice:
            return "orthomodular lattice"
        return "orthomodular poset"

    def summary(self) -> dict:
        return {
            "conclusion": self.conclusion,
            "checked": dict(self.checked),
            "violations": {k: len(v) for k, v in self.violations.items()},
        }


def verify_orthostructure(poset: LogicPoset, covers: Optional[Sequence[tuple[int, int]]] = None,
                          max_examples: int = 20) -> OrthoReport:
    """Check partial-order, orthocomplement and orthomodular laws exhaustively.

    ``covers`` lets a caller supply an external covering relation (for
    example one read from a file) to be checked against the order.
    """
    n = len(poset)
    order, comp = poset.order, poset.complement
    rep = OrthoReport()

    def record(name, bad, count):
        rep.violations[name] = bad[:max_examples]
        rep.checked[name] = count
        if bad:
            log.warning("%s: %d violations", name, len(bad))

    record("reflexive", [i for i in range(n) if not order[i][i]], n)
    record("antisymmetric", [(i, j) for i in range(n) for j in range(i + 1, n) if order[i][j] and order[j][i]], n * (n - 1) // 2)
    record("transitive", [(i, j) for i in range(n) for j in range(n)
                          if not order[i][j] and any(order[i][k] and order[k][j] for k in range(n))], n * n)
    try:
        zero, one = poset.zero, poset.one
        record("bounds", [], 1)
    except ValueError as exc:
        record("bounds", [str(exc)], 1)
        zero = one = None

    cover_list = list(covers) if covers is not None else poset.covers
    closure = transitive_closure(n, cover_list)
    record("covers", [(i, j) for i in range(n) for j in range(n) if closure[i][j] != order[i][j]], n * n)
    reduced = set(transitive_reduction(order))
    record("covers_reduced", sorted(set(cover_list) ^ reduced), len(cover_list))

    record("involution", [i for i in range(n) if comp[comp[i]] != i], n)
    record("order_reversal", [(i, j) for i in range(n) for j in range(n) if order[i][j] and not order[comp[j]][comp[i]]], n * n)
    law = []
    for i in range(n):
        if poset.join(i, comp[i]) != one:
            law.append(("join", i))
        if poset.meet(i, comp[i]) != zero:
            law.append(("meet", i))
    record("complement_laws", law, n)

    om = []
    pairs = 0
    for a in range(n):
        for c in range(n):
            if a == c or not order[a][c]:
                continue
            pairs += 1
            m = poset.meet(comp[a], c)
            if isinstance(m, NoMeet):
                om.append((a, c, "meet missing"))
                continue
            j = poset.join(a, m)
            if isinstance(j, NoJoin) or j != c:
                om.append((a, c, "join differs"))
    record("orthomodular", om, pairs)

    rep.lattice = not lattice_failures(poset, "join") and not lattice_failures(poset, "meet")
    if rep.lattice and rep.ok:
        rep.distributive = is_distributive(poset, range(n))
    return rep


def is_distributive(poset: LogicPoset, subset: Iterable[int]) -> bool:
    """``a ^ (b v c) == (a ^ b) v (a ^ c)`` for all triples, using the poset's joins and meets."""
    s = list(subset)
    for a, b, c in itertools.product(s, repeat=3):
        bc = poset.join(b, c)
        ab, ac = poset.meet(a, b), poset.meet(a, c)
        if isinstance(bc, NoJoin) or isinstance(ab, NoMeet) or isinstance(ac, NoMeet):
            return False
        lhs = poset.meet(a, bc)
        rhs = poset.join(ab, ac)
        if isinstance(lhs, NoMeet) or isinstance(rhs, NoJoin) or lhs != rhs:
            return False
    return True


# ---------------------------------------------------------------------------
# Compatibility


def generated_subposet(poset: LogicPoset, elements: Iterable[Elem]) -> list[int]:
    """Smallest subset containing the elements, 0 and 1, closed under complement and existing joins and meets."""
    s = {poset.zero, poset.one} | {poset.index(e) for e in elements}
    while True:
        new = {poset.complement[i] for i in s}
        for a, b in itertools.combinations(sorted(s), 2):
            for v in (poset.join(a, b), poset.meet(a, b)):
                if isinstance(v, int):
                    new.add(v)
        if new <= s:
            return sorted(s)
        s |= new


def is_boolean(poset: LogicPoset, subset: Iterable[int]) -> bool:
    s = sorted(set(subset))
    members = set(s)
    for a, b in itertools.combinations(s, 2):
        j, m = poset.join(a, b), poset.meet(a, b)
        if isinstance(j, NoJoin) or isinstance(m, NoMeet) or j not in members or m not in members:
            return False
    return is_distributive(poset, s)


def orthogonal_decomposition(poset: LogicPoset, q: Elem, r: Elem) -> Optional[tuple[int, int, int]]:
    """Pairwise orthogonal ``(q', r', d)`` with ``q = q' v d`` and ``r = r' v d``, or None."""
    q, r = poset.index(q), poset.index(r)
    below_q = list(_bits(poset.down[q]))
    below_r = list(_bits(poset.down[r]))
    for d in _bits(poset.down[q] & poset.down[r]):
        qs = [a for a in below_q if poset.orthogonal(a, d) and poset.join(a, d) == q]
        rs = [b for b in below_r if poset.orthogonal(b, d) and poset.join(b, d) == r]
        for a in qs:
            for b in rs:
                if poset.orthogonal(a, b):
                    return a, b, d
    return None


def compatible(poset: LogicPoset, q: Elem, r: Elem) -> bool:
    if orthogonal_decomposition(poset, q, r) is None:
        return False
    return is_boolean(poset, generated_subposet(poset, [q, r]))


# ---------------------------------------------------------------------------
# Set representation


@dataclass(frozen=True)
class ConcreteLogic:
    """Subsets of ``points`` (indices into the state list), one per poset element."""

    points: tuple
    sets: tuple
    states: tuple = ()
    phase_points: tuple = ()

    def set_of(self, i: int) -> frozenset:
        return self.sets[i]

    def check_closure(self) -> list:
        """Violations of: empty set present, complement closure, disjoint-union closure."""
        omega = frozenset(range(len(self.points)))
        family = set(self.sets)
        bad = []
        if frozenset() not in family:
            bad.append("empty set missing")
        for s in family:
            if omega - s not in family:
                bad.append(("complement", sorted(s)))
        for s, t in itertools.combinations(family, 2):
            if not s & t and s | t not in family:
                bad.append(("union", sorted(s), sorted(t)))
        return bad


def concrete_representation(poset: LogicPoset, two_valued_states: Sequence[BoxState]) -> ConcreteLogic:
    """Represent each element by the two-valued states answering it with certainty."""
    if poset.questions is None:
        raise ValueError("set representation needs the questions behind the poset")
    states = list(two_valued_states)
    n = len(poset)
    sets = []
    for q in poset.questions:
        members = set()
        for k, s in enumerate(states):
            v = q.prob(s)
            if v not in (0, 1):
                raise NotSetRepresentable(f"state {k} gives {q} the value {v}, not 0 or 1")
            if v == 1:
                members.add(k)
        sets.append(frozenset(members))
    bad = [(i, j) for i in range(n) for j in range(n) if poset.order[i][j] != (sets[i] <= sets[j])]
    if bad:
        i, j = bad[0]
        raise NotSetRepresentable(
            f"{len(bad)} pairs break the order isomorphism, e.g. {poset.labels[i]} vs {poset.labels[j]}")
    logic = ConcreteLogic(tuple(range(len(states))), tuple(sets), tuple(states))
    problems = logic.check_closure()
    if problems:
        raise NotSetRepresentable(f"subset family is not a concrete logic: {problems[:3]}")
    if poset.shape == BoxShape(2, 2):
        logic = _attach_phase_space(poset, logic)
    return logic


def _attach_phase_space(poset: LogicPoset, logic: ConcreteLogic) -> ConcreteLogic:
    """Match states to phase-space points through point masses and compare atom subsets."""
    by_vector = {s.vector: k for k, s in enumerate(logic.states)}
    point_of = {}
    for p in GAMMA:
        k = by_vector.get(phi(ClassicalMeasure.point_mass(p)).vector)
        if k is None:
            raise NotSetRepresentable(f"no two-valued state matches phase-space point {tuple(p)}")
        point_of[k] = p
    if len(point_of) != len(logic.states):
        raise NotSetRepresentable("two-valued states and phase-space points are not in bijection")
    for i in poset.atoms:
        q = poset.questions[i]
        if not isinstance(q.expr, Atom):
            raise NotSetRepresentable(f"atom {q} is not an elementary question")
        image = frozenset(point_of[k] for k in logic.sets[i])
        if image != question_subset(q.expr):
            raise NotSetRepresentable(f"subset of {q} differs from its phase-space subset")
    return ConcreteLogic(logic.points, logic.sets, logic.states, tuple(point_of[k] for k in logic.points))


# ---------------------------------------------------------------------------
# Exports


def table1_rows(poset: LogicPoset) -> list[tuple[str, list[str]]]:
    covers = poset.covers
    return [(poset.labels[i], [poset.labels[j] for a, j in covers if a == i]) for i in range(len(poset))]


def table1_csv(poset: LogicPoset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["question", "covered_by"])
    for label, ups in table1_rows(poset):
        w.writerow([label, ", ".join(ups)])
    return buf.getvalue()


def read_table1_csv(text: str) -> dict[str, list[str]]:
    rows = list(csv.reader(io.StringIO(text)))
    return {r[0]: [x for x in r[1].split(", ") if x] for r in rows[1:]}


def to_dot(poset: LogicPoset, labels: bool = True) -> str:
    """Hasse diagram, bottom to top."""
    lines = ["digraph logic {", "  rankdir=BT;", "  node [shape=plaintext];" if labels else "  node [shape=point];"]
    for i, lab in enumerate(poset.labels):
        text = lab if labels else ""
        lines.append(f'  n{i} [label="{text}"];')
    for i, j in poset.covers:
        lines.append(f"  n{i} -> n{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def rank_levels(poset: LogicPoset) -> list[int]:
    """Length of the longest chain from the bottom to each element."""
    n = len(poset)
    level = [0] * n
    for i in sorted(range(n), key=lambda k: bin(poset.down[k]).count("1")):
        below = [a for a, b in poset.covers if b == i]
        level[i] = max((level[a] + 1 for a in below), default=0)
    return level
