"""Two-party box worlds: shapes, the state polytope and the classical picture.

A state of an ``(n, d)`` box world is a ``d^2 x n^2`` matrix. Rows are
joint outcomes ``(alpha, beta)`` and columns joint settings ``(a, b)``,
both in lexicographic order, so for ``(2, 2)`` the rows are ``00, 01, 10,
11`` and the columns ``xx, xy, yx, yy``. Matrix entries are flattened
row-major into the LP variable vector.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

from .exactmath import (
    LinearSystem,
    enumerate_vertices,
    format_rational,
    lp_maximize,
    parse_rational,
    row_space_rank,
)

SETTING_LABELS = "xyzuvw"


class UnsupportedShape(ValueError):
    pass


def setting_label(a: int) -> str:
    return SETTING_LABELS[a] if a < len(SETTING_LABELS) else f"s{a}"


def outcome_label(alpha: int) -> str:
    return str(alpha) if alpha < 10 else f"<{alpha}>"


@dataclass(frozen=True)
class BoxShape:
    inputs: int = 2
    outputs: int = 2

    def __post_init__(self):
        if self.inputs < 1 or self.outputs < 2:
            raise ValueError(f"invalid box shape ({self.inputs},{self.outputs})")

    @property
    def n_rows(self) -> int:
        return self.outputs ** 2

    @property
    def n_cols(self) -> int:
        return self.inputs ** 2

    @property
    def n_vars(self) -> int:
        return self.n_rows * self.n_cols

    def row(self, alpha: int, beta: int) -> int:
        return alpha * self.outputs + beta

    def col(self, a: int, b: int) -> int:
        return a * self.inputs + b

    def var(self, a: int, b: int, alpha: int, beta: int) -> int:
        return self.row(alpha, beta) * self.n_cols + self.col(a, b)

    def settings(self) -> list[tuple[int, int]]:
        return list(itertools.product(range(self.inputs), repeat=2))

    def outcomes(self) -> list[tuple[int, int]]:
        return list(itertools.product(range(self.outputs), repeat=2))

    def __str__(self):
        return f"({self.inputs},{self.outputs})"


class Atom(NamedTuple):
    """Elementary question ``[ab, alpha beta]``."""

    a: int
    b: int
    alpha: int
    beta: int

    def label(self) -> str:
        return f"[{setting_label(self.a)}{setting_label(self.b)},{outcome_label(self.alpha)}{outcome_label(self.beta)}]"


@dataclass(frozen=True)
class BoxState:
    shape: BoxShape
    matrix: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        m = tuple(tuple(Fraction(v) for v in row) for row in self.matrix)
        if len(m) != self.shape.n_rows or any(len(r) != self.shape.n_cols for r in m):
            raise ValueError(f"state matrix must be {self.shape.n_rows}x{self.shape.n_cols}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, shape: BoxShape, vec: Sequence) -> "BoxState":
        vec = list(vec)
        n = shape.n_cols
        return cls(shape, tuple(tuple(vec[r * n:(r + 1) * n]) for r in range(shape.n_rows)))

    @property
    def vector(self) -> tuple[Fraction, ...]:
        return tuple(v for row in self.matrix for v in row)

    def prob(self, a: int, b: int, alpha: int, beta: int) -> Fraction:
        return self.matrix[self.shape.row(alpha, beta)][self.shape.col(a, b)]

    def mix(self, weight, other: "BoxState") -> "BoxState":
        """``weight * self + (1 - weight) * other``."""
        w = Fraction(weight)
        return BoxState.from_vector(self.shape, [w * x + (1 - w) * y for x, y in zip(self.vector, other.vector)])

    def is_two_valued(self) -> bool:
        return all(v in (0, 1) for v in self.vector)

    def to_json(self) -> dict:
        return {
            "shape": [self.shape.inputs, self.shape.outputs],
            "matrix": [[format_rational(v) for v in row] for row in self.matrix],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "BoxState":
        shape = BoxShape(*data["shape"])
        return cls(shape, tuple(tuple(parse_rational(v) for v in row) for row in data["matrix"]))

    def __str__(self):
        return "\n".join(" ".join(f"{format_rational(v):>4}" for v in row) for row in self.matrix)


def mixture(states: Iterable[BoxState], weights: Iterable) -> BoxState:
    states = list(states)
    acc = [Fraction(0)] * states[0].shape.n_vars
    for s, w in zip(states, weights):
        w = Fraction(w)
        acc = [x + w * y for x, y in zip(acc, s.vector)]
    return BoxState.from_vector(states[0].shape, acc)


def uniform_state(shape: BoxShape) -> BoxState:
    return BoxState.from_vector(shape, [Fraction(1, shape.n_rows)] * shape.n_vars)


# ---------------------------------------------------------------------------
# The polytope


class BoxPolytope:
    """Positivity, normalization and no-signalling constraints for one shape.

    Equality rows come first as normalization (one per column), then
    party-one marginals and party-two marginals for every pair of the
    other party's settings. They are kept unreduced; use
    :attr:`rank` for the rank.
    """

    def __init__(self, shape: BoxShape):
        self.shape = shape
        norm, party1, party2 = [], [], []
        n, d = shape.inputs, shape.outputs
        for a, b in shape.settings():
            coeffs = [0] * shape.n_vars
            for alpha, beta in shape.outcomes():
                coeffs[shape.var(a, b, alpha, beta)] = 1
            norm.append((coeffs, 1))
        for a in range(n):
            for alpha in range(d):
                for b, b2 in itertools.combinations(range(n), 2):
                    coeffs = [0] * shape.n_vars
                    for beta in range(d):
                        coeffs[shape.var(a, b, alpha, beta)] += 1
                        coeffs[shape.var(a, b2, alpha, beta)] -= 1
                    party1.append((coeffs, 0))
        for b in range(n):
            for beta in range(d):
                for a, a2 in itertools.combinations(range(n), 2):
                    coeffs = [0] * shape.n_vars
                    for alpha in range(d):
                        coeffs[shape.var(a, b, alpha, beta)] += 1
                        coeffs[shape.var(a2, b, alpha, beta)] -= 1
                    party2.append((coeffs, 0))
        self.normalization_rows = [(tuple(Fraction(c) for c in a), Fraction(r)) for a, r in norm]
        self.no_signalling_rows = [(tuple(Fraction(c) for c in a), Fraction(r)) for a, r in party1 + party2]
        self.system = LinearSystem(shape.n_vars, tuple(self.normalization_rows + self.no_signalling_rows))

    @property
    def n_vars(self) -> int:
        return self.shape.n_vars

    @cached_property
    def affine_rows(self) -> list[tuple[Fraction, ...]]:
        """Each equality ``a.x = b`` as the vector ``(a, -b)`` of a vanishing affine functional."""
        return [a + (-b,) for a, b in self.system.eq_rows]

    @cached_property
    def rank(self) -> int:
        return row_space_rank(self.affine_rows)

    @cached_property
    def vertices(self) -> list[tuple[Fraction, ...]]:
        return enumerate_vertices(self.system)

    def contains(self, state: BoxState) -> bool:
        if state.shape != self.shape:
            return False
        return self.system.is_satisfied_by(state.vector)

    def maximize(self, coeffs: Sequence, constant=0, method: str = "simplex") -> Fraction:
        """Maximum of ``constant + coeffs . x`` over the polytope.

        ``method="vertices"`` evaluates at every vertex (after a one-off
        enumeration); ``"simplex"`` solves the LP.
        """
        if method == "vertices":
            return max(sum((c * v for c, v in zip(coeffs, vert) if c and v), Fraction(constant)) for vert in self.vertices)
        res = lp_maximize((tuple(coeffs), constant), self.system)
        if res.status != "optimal":  # pragma: no cover - polytope is nonempty and bounded
            raise RuntimeError(f"LP over the box polytope returned {res.status}")
        return res.optimum


def build_polytope(shape: BoxShape) -> BoxPolytope:
    return BoxPolytope(shape)


# ---------------------------------------------------------------------------
# Classical picture (settings x = 0, y = 1)


def classically_correlated_state(m: int, n: int, l: int, k: int) -> BoxState:
    """Deterministic box with outputs ``alpha = m*a + n``, ``beta = l*b + k`` (mod 2)."""
    shape = BoxShape(2, 2)
    vec = [Fraction(0)] * shape.n_vars
    for a, b in shape.settings():
        alpha = (m * a + n) % 2
        beta = (l * b + k) % 2
        vec[shape.var(a, b, alpha, beta)] = Fraction(1)
    return BoxState.from_vector(shape, vec)


def classically_correlated_states() -> list[BoxState]:
    return [classically_correlated_state(*bits) for bits in itertools.product((0, 1), repeat=4)]


class PhasePoint(NamedTuple):
    """Values of ``x`` and ``y`` on party one (``a``, ``b``) and party two (``c``, ``d``)."""

    a: int
    b: int
    c: int
    d: int


GAMMA: tuple[PhasePoint, ...] = tuple(PhasePoint(*p) for p in itertools.product((0, 1), repeat=4))


def question_subset(atom: Atom) -> frozenset[PhasePoint]:
    """Points of the classical phase space where the elementary question is answered yes."""
    if max(atom) > 1 or min(atom) < 0:
        raise UnsupportedShape("phase-space subsets are defined for the (2,2) box world only")
    s1, s2, alpha, beta = atom
    # party one reads coordinate s1 (x -> a, y -> b); party two reads 2 + s2 (x -> c, y -> d)
    return frozenset(p for p in GAMMA if p[s1] == alpha and p[2 + s2] == beta)


@dataclass(frozen=True)
class ClassicalMeasure:
    weights: tuple[tuple[PhasePoint, Fraction], ...]

    def __post_init__(self):
        w = {}
        for p, v in self.weights:
            p = PhasePoint(*p)
            if p not in GAMMA:
                raise ValueError(f"{p} is not a phase-space point")
            w[p] = w.get(p, Fraction(0)) + Fraction(v)
        if any(v < 0 for v in w.values()) or sum(w.values()) != 1:
            raise ValueError("classical measure weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", tuple(sorted((p, v) for p, v in w.items() if v)))

    @classmethod
    def from_dict(cls, weights: Mapping) -> "ClassicalMeasure":
        return cls(tuple(weights.items()))

    @classmethod
    def point_mass(cls, point) -> "ClassicalMeasure":
        return cls(((PhasePoint(*point), Fraction(1)),))

    def __call__(self, subset: Iterable[PhasePoint]) -> Fraction:
        s = set(subset)
        return sum((v for p, v in self.weights if p in s), Fraction(0))

    def mix(self, weight, other: "ClassicalMeasure") -> "ClassicalMeasure":
        w = Fraction(weight)
        return ClassicalMeasure(tuple((p, w * v) for p, v in self.weights) + tuple((p, (1 - w) * v) for p, v in other.weights))


def phi(mu: ClassicalMeasure) -> BoxState:
    """Box state whose entry ``(alpha beta, ab)`` is the measure of ``E([ab, alpha beta])``."""
    shape = BoxShape(2, 2)
    vec = [Fraction(0)] * shape.n_vars
    for a, b in shape.settings():
        for alpha, beta in shape.outcomes():
            vec[shape.var(a, b, alpha, beta)] = mu(question_subset(Atom(a, b, alpha, beta)))
    return BoxState.from_vector(shape, vec)


def phi_preimage_pair(image: BoxState) -> tuple[ClassicalMeasure, ClassicalMeasure]:
    """Two different measures with ``phi(mu) == image``; ValueError if the preimage is empty or a single point."""
    shape = BoxShape(2, 2)
    if image.shape != shape:
        raise UnsupportedShape("phi is defined for the (2,2) box world only")
    eqs = []
    for a, b in shape.settings():
        for alpha, beta in shape.outcomes():
            subset = question_subset(Atom(a, b, alpha, beta))
            eqs.append(([1 if p in subset else 0 for p in GAMMA], image.prob(a, b, alpha, beta)))
    eqs.append(([1] * len(GAMMA), 1))
    system = LinearSystem(len(GAMMA), tuple(eqs))
    for k in range(len(GAMMA)):
        unit = [0] * len(GAMMA)
        unit[k] = 1
        hi = lp_maximize(unit, system)
        if hi.status != "optimal":
            raise ValueError("image is not in the range of phi")
        lo = lp_maximize([-u for u in unit], system)
        if hi.optimum != -lo.optimum:
            return (ClassicalMeasure(tuple(zip(GAMMA, hi.optimizer))),
                    ClassicalMeasure(tuple(zip(GAMMA, lo.optimizer))))
    raise ValueError("image has a unique preimage")
