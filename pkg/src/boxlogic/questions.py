"""Questions as affine probability functionals, and their closure.

A question ``q`` is stored twice: as the raw functional read off its
construction expression, and as a canonical key. The key is the raw
vector ``(c_1, ..., c_N, k)`` reduced against the row space of the
polytope's equality constraints, so two questions are semantically equal
exactly when their keys coincide.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence, Union

from .boxworld import SETTING_LABELS, Atom, BoxPolytope, BoxShape, BoxState
from .exactmath import (
    ContractViolation,
    format_rational,
    lp_maximize,
    reduce_against,
    rref,
    row_space_rank,
)

log = logging.getLogger(__name__)

VERTEX_METHOD_MAX_VARS = 32


# ---------------------------------------------------------------------------
# Construction expressions


@dataclass(frozen=True)
class Zero:
    def __str__(self):
        return "0"


@dataclass(frozen=True)
class One:
    def __str__(self):
        return "1"


@dataclass(frozen=True)
class OSum:
    terms: tuple

    def __str__(self):
        return "+".join(format_expr(t) for t in self.terms)


@dataclass(frozen=True)
class Complement:
    inner: object

    def __str__(self):
        inner = format_expr(self.inner)
        if isinstance(self.inner, OSum):
            inner = f"({inner})"
        return f"{inner}^c"


Expr = Union[Zero, One, Atom, OSum, Complement]
ZERO = Zero()
ONE = One()


def format_expr(e: Expr) -> str:
    if isinstance(e, Atom):
        return e.label()
    return str(e)


def expr_sort_key(e: Expr) -> tuple:
    """Zero, atoms, sums (by arity, then terms), complements, One."""
    if isinstance(e, Zero):
        return (0,)
    if isinstance(e, Atom):
        return (1, tuple(e))
    if isinstance(e, OSum):
        return (2, len(e.terms), tuple(expr_sort_key(t) for t in e.terms))
    if isinstance(e, Complement):
        return (3, expr_sort_key(e.inner))
    return (4,)


def complement_expr(e: Expr) -> Expr:
    if isinstance(e, Complement):
        return e.inner
    if isinstance(e, Zero):
        return ONE
    if isinstance(e, One):
        return ZERO
    return Complement(e)


def sum_expr(exprs: Iterable[Expr]) -> Expr:
    terms = []
    for e in exprs:
        if isinstance(e, OSum):
            terms.extend(e.terms)
        elif not isinstance(e, Zero):
            terms.append(e)
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return OSum(tuple(sorted(terms, key=expr_sort_key)))


_TOKEN = re.compile(r"\s*(\[[^\]]*\]|\^c|ᶜ|\+|⊕|\(|\)|0|1|𝟙)")


def parse_expr(text: str) -> Expr:
    """Parse bracket notation: ``[xx,00]+[xy,10]``, ``[yy,11]^c``, ``0``, ``1``."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"cannot parse question expression {text!r} at {pos}")
        tokens.append(m.group(1))
        pos = m.end()
    tokens = ["^c" if t == "ᶜ" else "+" if t == "⊕" else "1" if t == "𝟙" else t for t in tokens]
    it = _Parser(tokens)
    e = it.expr()
    if it.pos != len(tokens):
        raise ValueError(f"trailing tokens in {text!r}")
    return e


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        t = self.peek()
        self.pos += 1
        return t

    def expr(self):
        terms = [self.term()]
        while self.peek() == "+":
            self.take()
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else sum_expr(terms)

    def term(self):
        e = self.primary()
        while self.peek() == "^c":
            self.take()
            e = complement_expr(e)
        return e

    def primary(self):
        t = self.take()
        if t == "(":
            e = self.expr()
            if self.take() != ")":
                raise ValueError("unbalanced parentheses")
            return e
        if t == "0":
            return ZERO
        if t == "1":
            return ONE
        if t and t.startswith("["):
            m = re.fullmatch(r"\[\s*(\w)(\w)\s*,\s*(\d)(\d)\s*\]", t)
            if m is None:
                raise ValueError(f"bad elementary question {t!r}")
            a, b = (SETTING_LABELS.index(ch) for ch in m.group(1, 2))
            return Atom(a, b, int(m.group(3)), int(m.group(4)))
        raise ValueError(f"unexpected token {t!r}")


# ---------------------------------------------------------------------------
# Questions


class NotOrthogonal(ValueError):
    def __init__(self, q: "Question", r: Optional["Question"] = None):
        self.pair = (q, r)
        if r is None:
            super().__init__(f"terms of {q} are pairwise orthogonal but their sum exceeds 1")
        else:
            super().__init__(f"{q} and {r} are not orthogonal")


class ResourceLimitExceeded(RuntimeError):
    def __init__(self, message: str, partial: Optional["QuestionSet"] = None, passes: int = 0):
        super().__init__(message)
        self.partial = partial
        self.passes = passes


@dataclass(frozen=True, eq=False)
class Question:
    """A yes/no question; ``p(q, rho) = constant + coeffs . rho``.

    Equality and hashing are semantic (canonical key), not syntactic.
    """

    expr: Expr
    constant: Fraction
    coeffs: tuple[Fraction, ...]
    key: tuple[Fraction, ...]
    algebra: "QuestionAlgebra" = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, Question):
            return NotImplemented
        return self.key == other.key and self.algebra.shape == other.algebra.shape

    def __hash__(self):
        return hash(self.key)

    def __str__(self):
        return format_expr(self.expr)

    @property
    def label(self) -> str:
        return format_expr(self.expr)

    @property
    def canonical_constant(self) -> Fraction:
        return self.key[-1]

    @property
    def canonical_coeffs(self) -> tuple[Fraction, ...]:
        return self.key[:-1]

    def prob(self, state: Union[BoxState, Sequence]) -> Fraction:
        vec = state.vector if isinstance(state, BoxState) else state
        return self.constant + sum((c * v for c, v in zip(self.coeffs, vec) if c and v), Fraction(0))

    def to_json(self) -> dict:
        return {
            "expr": self.label,
            "k": format_rational(self.canonical_constant),
            "c": [format_rational(v) for v in self.canonical_coeffs],
        }


def _solve_max(args):
    system, coeffs, constant = args
    return lp_maximize((coeffs, constant), system).optimum


class QuestionAlgebra:
    """Factory and order oracle for the questions of one box world.

    ``method`` selects how maxima of functionals over the polytope are
    found: ``"simplex"`` solves an exact LP, ``"vertices"`` evaluates at
    every vertex, ``"auto"`` uses vertices up to 32 variables. Maxima are
    memoized by canonical functional; ``lp_calls`` counts distinct
    optimizations and ``max_lp_calls`` caps them.
    """

    def __init__(self, shape: BoxShape = BoxShape(2, 2), method: str = "auto", workers: int = 1,
                 max_lp_calls: Optional[int] = None):
        if method not in ("auto", "simplex", "vertices"):
            raise ValueError(f"unknown method {method!r}")
        self.shape = shape
        self.polytope = BoxPolytope(shape)
        if method == "auto":
            method = "vertices" if shape.n_vars <= VERTEX_METHOD_MAX_VARS else "simplex"
        self.method = method
        self.workers = max(1, int(workers))
        self.max_lp_calls = max_lp_calls
        self.lp_calls = 0
        self._basis, self._pivots = rref(self.polytope.affine_rows)
        self._max_cache: dict[tuple, Fraction] = {}
        self._profiles: dict[tuple, tuple[Fraction, ...]] = {}

    # -- construction -------------------------------------------------------

    def canonical(self, coeffs: Sequence, constant) -> tuple[Fraction, ...]:
        return reduce_against(tuple(coeffs) + (Fraction(constant),), self._basis, self._pivots)

    def _make(self, expr: Expr, coeffs, constant, key=None) -> Question:
        coeffs = tuple(Fraction(c) for c in coeffs)
        constant = Fraction(constant)
        if key is None:
            key = self.canonical(coeffs, constant)
        return Question(expr, constant, coeffs, key, self)

    @property
    def zero(self) -> Question:
        return self._make(ZERO, [0] * self.shape.n_vars, 0)

    @property
    def one(self) -> Question:
        return self._make(ONE, [0] * self.shape.n_vars, 1)

    def atom(self, a: int, b: int, alpha: int, beta: int) -> Question:
        n, d = self.shape.inputs, self.shape.outputs
        if not (0 <= a < n and 0 <= b < n and 0 <= alpha < d and 0 <= beta < d):
            raise ContractViolation(f"elementary question ({a},{b},{alpha},{beta}) out of range for shape {self.shape}")
        coeffs = [0] * self.shape.n_vars
        coeffs[self.shape.var(a, b, alpha, beta)] = 1
        return self._make(Atom(a, b, alpha, beta), coeffs, 0)

    def atoms(self) -> list[Question]:
        return [self.atom(a, b, al, be) for a, b in self.shape.settings() for al, be in self.shape.outcomes()]

    def from_expr(self, expr: Union[str, Expr]) -> Question:
        """Build a question from an expression, checking sums for orthogonality."""
        if isinstance(expr, str):
            expr = parse_expr(expr)
        if isinstance(expr, Zero):
            return self.zero
        if isinstance(expr, One):
            return self.one
        if isinstance(expr, Atom):
            return self.atom(*expr)
        if isinstance(expr, Complement):
            return self.complement(self.from_expr(expr.inner))
        return self.osum([self.from_expr(t) for t in expr.terms])

    def complement(self, q: Question) -> Question:
        key = tuple(-v for v in q.key[:-1]) + (1 - q.key[-1],)
        return self._make(complement_expr(q.expr), [-c for c in q.coeffs], 1 - q.constant, key)

    def osum(self, qs: Sequence[Question]) -> Question:
        qs = list(qs)
        for i in range(len(qs)):
            for j in range(i + 1, len(qs)):
                if not self.orthogonal(qs[i], qs[j]):
                    raise NotOrthogonal(qs[i], qs[j])
        n = self.shape.n_vars
        coeffs = [sum((q.coeffs[k] for q in qs), Fraction(0)) for k in range(n)]
        constant = sum((q.constant for q in qs), Fraction(0))
        key = tuple(sum((q.key[k] for q in qs), Fraction(0)) for k in range(n + 1)) if qs else None
        out = self._make(sum_expr(q.expr for q in qs), coeffs, constant, key)
        if len(qs) > 2 and self._maximum(out.key) > 1:
            raise NotOrthogonal(out)
        return out

    # -- order oracle -------------------------------------------------------

    def _profile(self, key: tuple) -> tuple[Fraction, ...]:
        prof = self._profiles.get(key)
        if prof is None:
            c, k = key[:-1], key[-1]
            prof = tuple(k + sum((x * v for x, v in zip(c, vert) if x and v), Fraction(0)) for vert in self.polytope.vertices)
            self._profiles[key] = prof
        return prof

    def _charge(self, n: int) -> None:
        if self.max_lp_calls is not None and self.lp_calls + n > self.max_lp_calls:
            raise ResourceLimitExceeded(f"LP call limit {self.max_lp_calls} reached")
        self.lp_calls += n

    def _maximum(self, key: tuple) -> Fraction:
        hit = self._max_cache.get(key)
        if hit is not None:
            return hit
        self._charge(1)
        if self.method == "vertices":
            value = max(self._profile(key))
        else:
            value = self.polytope.maximize(key[:-1], key[-1], method="simplex")
        self._max_cache[key] = value
        return value

    def maximize_many(self, keys: Sequence[tuple]) -> list[Fraction]:
        """Maxima of several canonical functionals; the simplex path can fan out to worker processes."""
        todo = list(dict.fromkeys(k for k in keys if k not in self._max_cache))
        if todo and self.method == "simplex" and self.workers > 1 and len(todo) > 1:
            budget = len(todo) if self.max_lp_calls is None else max(0, self.max_lp_calls - self.lp_calls)
            batch = todo[:budget]
            with ProcessPoolExecutor(self.workers) as pool:
                jobs = [(self.polytope.system, k[:-1], k[-1]) for k in batch]
                for k, v in zip(batch, pool.map(_solve_max, jobs, chunksize=16)):
                    self._max_cache[k] = v
            self.lp_calls += len(batch)
            if len(batch) < len(todo):
                raise ResourceLimitExceeded(f"LP call limit {self.max_lp_calls} reached")
        return [self._maximum(k) for k in keys]

    def maximum(self, q: Question) -> Fraction:
        return self._maximum(q.key)

    def _combined_maximum(self, q: Question, r: Question, sign: int) -> Fraction:
        key = _add(q.key, r.key) if sign > 0 else _sub(q.key, r.key)
        if self.method == "vertices" and key not in self._max_cache:
            # profiles are affine in the functional, so combine them instead of re-evaluating
            pq, pr = self._profile(q.key), self._profile(r.key)
            self._charge(1)
            self._max_cache[key] = max(a + b for a, b in zip(pq, pr)) if sign > 0 else max(a - b for a, b in zip(pq, pr))
        return self._maximum(key)

    def orthogonal(self, q: Question, r: Question) -> bool:
        """``p(q) + p(r) <= 1`` on every state, i.e. ``q <= r^c``."""
        return self._combined_maximum(q, r, 1) <= 1

    def leq(self, q: Question, r: Question) -> bool:
        """``p(q) <= p(r)`` on every state."""
        return self._combined_maximum(q, r, -1) <= 0

    def equals(self, q: Question, r: Question) -> bool:
        return q.key == r.key

    def rank_equal(self, q: Question, r: Question) -> bool:
        """Equality by the rank test: the difference row adds nothing to the constraint rows."""
        diff = tuple(a - b for a, b in zip(q.coeffs + (q.constant,), r.coeffs + (r.constant,)))
        return row_space_rank(self.polytope.affine_rows + [diff]) == self.polytope.rank

    # -- closure ------------------------------------------------------------

    def generate(self, max_questions: Optional[int] = None) -> "QuestionSet":
        """Close ``atoms + {0, 1}`` under complement and binary sums until nothing new appears."""
        current = QuestionSet(self, [self.zero] + self.atoms() + [self.one])
        passes = 0
        while True:
            passes += 1
            nxt = QuestionSet(self, current, sort=False)
            try:
                self._close_once(current, nxt, max_questions)
            except ResourceLimitExceeded as exc:
                nxt.sort()
                nxt.passes = passes
                raise ResourceLimitExceeded(
                    f"{exc} during pass {passes} with {len(nxt)} questions", partial=nxt, passes=passes
                ) from None
            nxt.sort()
            log.info("closure pass %d: %d -> %d questions", passes, len(current), len(nxt))
            if len(nxt) == len(current):
                nxt.passes = passes - 1
                return nxt
            current = nxt


    def _close_once(self, current: Iterable[Question], out: "QuestionSet", max_questions: Optional[int] = None) -> None:
        items = list(current)
        for q in items:
            out.add(self.complement(q))
        pairs = [(i, j) for i in range(len(items)) for j in range(i, len(items))]
        if self.method == "simplex":
            self.maximize_many([_add(items[i].key, items[j].key) for i, j in pairs])
        for i, j in pairs:
            if self.orthogonal(items[i], items[j]):
                out.add(self.osum([items[i], items[j]]))
            if max_questions is not None and len(out) > max_questions:
                raise ResourceLimitExceeded(f"question limit {max_questions} exceeded")

    def close_once(self, questions: Iterable[Question]) -> "QuestionSet":
        """One closure pass: the input plus all complements and orthogonal binary sums."""
        items = list(questions)
        out = QuestionSet(self, items, sort=False)
        self._close_once(items, out)
        out.sort()
        return out


def _add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def _sub(a: tuple, b: tuple) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


class QuestionSet:
    """Distinct questions in canonical order, looked up by canonical key.

    ``passes`` is the number of closure passes that added something.
    """

    def __init__(self, algebra: QuestionAlgebra, questions: Iterable[Question] = (), sort: bool = True):
        self.algebra = algebra
        self._items: list[Question] = []
        self._index: dict[tuple, int] = {}
        self.passes = 0
        for q in questions:
            self.add(q)
        if sort:
            self.sort()

    def add(self, q: Question) -> bool:
        if q.key in self._index:
            return False
        self._index[q.key] = len(self._items)
        self._items.append(q)
        return True

    def sort(self) -> None:
        self._items.sort(key=lambda q: expr_sort_key(q.expr))
        self._index = {q.key: i for i, q in enumerate(self._items)}

    def __len__(self):
        return len(self._items)

    def __iter__(self) -> Iterator[Question]:
        return iter(self._items)

    def __getitem__(self, i: int) -> Question:
        return self._items[i]

    def __contains__(self, q) -> bool:
        return q.key in self._index

    def index(self, q: Union[Question, str]) -> int:
        if isinstance(q, str):
            q = self.algebra.from_expr(q)
        return self._index[q.key]

    def find(self, q: Union[Question, str]) -> Question:
        return self._items[self.index(q)]

    @property
    def shape(self) -> BoxShape:
        return self.algebra.shape


# module-level conveniences mirroring the algebra methods


def complement(q: Question) -> Question:
    return q.algebra.complement(q)


def osum(qs: Sequence[Question]) -> Question:
    return qs[0].algebra.osum(qs)


def orthogonal(q: Question, r: Question) -> bool:
    return q.algebra.orthogonal(q, r)


def leq(q: Question, r: Question) -> bool:
    return q.algebra.leq(q, r)


def equals(q: Question, r: Question) -> bool:
    return q.algebra.equals(q, r)


def generate_logic(shape: BoxShape = BoxShape(2, 2), method: str = "auto", workers: int = 1,
                   max_questions: Optional[int] = None, max_lp_calls: Optional[int] = None) -> QuestionSet:
    algebra = QuestionAlgebra(shape, method=method, workers=workers, max_lp_calls=max_lp_calls)
    return algebra.generate(max_questions=max_questions)
