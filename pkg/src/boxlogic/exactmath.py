"""Exact rational linear algebra and linear programming.

Everything here works over :class:`fractions.Fraction`. There is no
floating point anywhere on these code paths, so every optimum, vertex and
certificate is an exact rational object that can be re-checked by plain
substitution.

The simplex implementation is a dense two-phase tableau method with Bland's
rule. Vertex enumeration uses the double description method on integer
vectors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

Rational = Fraction

__all__ = [
    "Rational",
    "ContractViolation",
    "UnboundedPolytope",
    "LinearSystem",
    "FarkasCertificate",
    "LPResult",
    "format_rational",
    "parse_rational",
    "as_rational_vector",
    "rref",
    "row_space_rank",
    "in_row_space",
    "nullspace",
    "lp_maximize",
    "lp_feasible",
    "verify_certificate",
    "enumerate_vertices",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class ContractViolation(ValueError):
    """Malformed input: ragged rows, dimension mismatch and the like."""


class UnboundedPolytope(ValueError):
    """Raised by vertex enumeration when the feasible set is not a polytope."""


_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def format_rational(x) -> str:
    """Canonical string: ``"p/q"`` with ``q > 0``, or ``"p"`` when ``q == 1``."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(s) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    m = _RATIONAL_RE.match(str(s))
    if m is None:
        raise ContractViolation(f"not a rational literal: {s!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ContractViolation(f"zero denominator in {s!r}")
    return Fraction(num, den)


def as_rational_vector(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in values)


def _dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b) if x and y), Fraction(0))


# ---------------------------------------------------------------------------
# Gaussian elimination


def _check_rectangular(rows: Sequence[Sequence], width: Optional[int] = None) -> int:
    if not rows:
        return width or 0
    n = len(rows[0]) if width is None else width
    for r in rows:
        if len(r) != n:
            raise ContractViolation(f"ragged rows: expected length {n}, got {len(r)}")
    return n


def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; zero rows are dropped.

    Returns ``(rows, pivot_columns)`` with ``rows[i][pivot_columns[i]] == 1``.
    """
    n = _check_rectangular(rows)
    mat = [[Fraction(v) for v in r] for r in rows]
    pivots: list[int] = []
    top = 0
    for col in range(n):
        piv = next((i for i in range(top, len(mat)) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[top], mat[piv] = mat[piv], mat[top]
        prow = mat[top]
        inv = 1 / prow[col]
        prow[:] = [v * inv for v in prow]
        nz = [j for j in range(n) if prow[j] != 0]
        for i in range(len(mat)):
            if i != top and mat[i][col] != 0:
                f = mat[i][col]
                row = mat[i]
                for j in nz:
                    row[j] -= f * prow[j]
        pivots.append(col)
        top += 1
        if top == len(mat):
            break
    return mat[:top], pivots


def row_space_rank(rows: Sequence[Sequence]) -> int:
    """Rank over the rationals, by exact elimination."""
    return len(rref(rows)[1])


def reduce_against(vector: Sequence, basis: Sequence[Sequence[Fraction]], pivots: Sequence[int]) -> tuple[Fraction, ...]:
    """Remainder of ``vector`` after eliminating the pivot columns of an RREF basis.

    Two vectors differ by an element of the row space iff their remainders
    are identical, so the remainder is a canonical representative of the
    coset.
    """
    v = [Fraction(x) for x in vector]
    for row, p in zip(basis, pivots):
        f = v[p]
        if f:
            for j, r in enumerate(row):
                if r:
                    v[j] -= f * r
    return tuple(v)


def in_row_space(vector: Sequence, rows: Sequence[Sequence]) -> bool:
    basis, pivots = rref(rows)
    return not any(reduce_against(vector, basis, pivots))


def nullspace(rows: Sequence[Sequence], n: Optional[int] = None) -> list[tuple[Fraction, ...]]:
    """Basis of ``{x : rows @ x = 0}``; one vector per free column."""
    n = _check_rectangular(rows, n)
    basis, pivots = rref(rows)
    free = [j for j in range(n) if j not in set(pivots)]
    out = []
    for f in free:
        x = [Fraction(0)] * n
        x[f] = Fraction(1)
        for row, p in zip(basis, pivots):
            x[p] = -row[f]
        out.append(tuple(x))
    return out


# ---------------------------------------------------------------------------
# Linear systems


Row = tuple[tuple[Fraction, ...], Fraction]


@dataclass(frozen=True)
class LinearSystem:
    """``eq_rows``: ``a.x == b``; ``le_rows``: ``a.x <= b``; ``nonneg[j]``: ``x_j >= 0``."""

    n_vars: int
    eq_rows: tuple[Row, ...] = ()
    le_rows: tuple[Row, ...] = ()
    nonneg: tuple[bool, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.n_vars < 0:
            raise ContractViolation("negative variable count")
        object.__setattr__(self, "eq_rows", tuple(_normalize_row(r, self.n_vars) for r in self.eq_rows))
        object.__setattr__(self, "le_rows", tuple(_normalize_row(r, self.n_vars) for r in self.le_rows))
        if self.nonneg is None:
            object.__setattr__(self, "nonneg", (True,) * self.n_vars)
        else:
            flags = tuple(bool(f) for f in self.nonneg)
            if len(flags) != self.n_vars:
                raise ContractViolation(f"{len(flags)} nonnegativity flags for {self.n_vars} variables")
            object.__setattr__(self, "nonneg", flags)

    def with_rows(self, eq_rows=(), le_rows=()) -> "LinearSystem":
        return LinearSystem(self.n_vars, self.eq_rows + tuple(eq_rows), self.le_rows + tuple(le_rows), self.nonneg)

    def is_satisfied_by(self, x: Sequence) -> bool:
        x = as_rational_vector(x)
        if len(x) != self.n_vars:
            raise ContractViolation("point has wrong dimension")
        if any(f and v < 0 for f, v in zip(self.nonneg, x)):
            return False
        if any(_dot(a, x) != b for a, b in self.eq_rows):
            return False
        return all(_dot(a, x) <= b for a, b in self.le_rows)


def _normalize_row(row, n: int) -> Row:
    coeffs, rhs = row
    coeffs = as_rational_vector(coeffs)
    if len(coeffs) != n:
        raise ContractViolation(f"row of length {len(coeffs)} in a system of {n} variables")
    return coeffs, Fraction(rhs)


@dataclass(frozen=True)
class FarkasCertificate:
    """Multipliers proving infeasibility.

    ``eq`` multipliers are free, ``le`` multipliers are nonnegative. The
    combined row ``sum(eq_i * a_i) + sum(le_i * g_i)`` is ``>= 0`` on
    nonnegative variables and ``== 0`` on free ones, while the combined
    right-hand side is negative. Any feasible point would make a
    nonnegative number equal to (or below) a negative one.
    """

    eq: tuple[Fraction, ...]
    le: tuple[Fraction, ...]


@dataclass(frozen=True)
class LPResult:
    status: str
    optimum: Optional[Fraction] = None
    optimizer: Optional[tuple[Fraction, ...]] = None
    certificate: Optional[FarkasCertificate] = None
    duals: Optional[tuple[Fraction, ...]] = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE


def verify_certificate(system: LinearSystem, cert: FarkasCertificate) -> bool:
    """Recombine the certificate in exact arithmetic; True iff it is a contradiction."""
    if len(cert.eq) != len(system.eq_rows) or len(cert.le) != len(system.le_rows):
        return False
    if any(y < 0 for y in cert.le):
        return False
    combo = [Fraction(0)] * system.n_vars
    rhs = Fraction(0)
    for y, (a, b) in list(zip(cert.eq, system.eq_rows)) + list(zip(cert.le, system.le_rows)):
        if y:
            for j, v in enumerate(a):
                if v:
                    combo[j] += y * v
            rhs += y * b
    for j, v in enumerate(combo):
        if system.nonneg[j]:
            if v < 0:
                return False
        elif v != 0:
            return False
    return rhs < 0


# ---------------------------------------------------------------------------
# Simplex


class _Tableau:
    """Standard-form tableau ``A x = b, x >= 0`` with ``b >= 0``.

    The last ``m`` columns are artificial variables, kept for the lifetime of
    the tableau so that ``B^-1`` (hence the simplex multipliers) can always
    be read off them.
    """

    def __init__(self, A: list[list[Fraction]], b: list[Fraction]):
        self.m = len(A)
        self.n = len(A[0]) if A else 0
        self.width = self.n + self.m
        self.rows = []
        for i, (row, rhs) in enumerate(zip(A, b)):
            art = [Fraction(0)] * self.m
            art[i] = Fraction(1)
            self.rows.append(list(row) + art + [rhs])
        self.basis = [self.n + i for i in range(self.m)]

    def pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        inv = 1 / prow[c]
        if inv != 1:
            prow[:] = [v * inv for v in prow]
        nz = [j for j, v in enumerate(prow) if v]
        for i, row in enumerate(self.rows):
            if i != r and row[c]:
                f = row[c]
                for j in nz:
                    row[j] -= f * prow[j]
        self.basis[r] = c

    def multipliers(self, cost: Sequence[Fraction]) -> list[Fraction]:
        """``c_B B^-1``, read from the artificial columns."""
        cb = [cost[j] for j in self.basis]
        return [
            sum((cb[i] * self.rows[i][self.n + k] for i in range(self.m) if cb[i]), Fraction(0))
            for k in range(self.m)
        ]


def _reduced_costs(tab: _Tableau, cost: Sequence[Fraction]) -> list[Fraction]:
    cb = [cost[j] for j in tab.basis]
    width = tab.width
    rc = list(cost[:width])
    for i, row in enumerate(tab.rows):
        c = cb[i]
        if c:
            for j in range(width):
                if row[j]:
                    rc[j] -= c * row[j]
    return rc


def _run(tab: _Tableau, cost: Sequence[Fraction], allowed: int) -> str:
    """Bland's rule: lowest-index improving column, lowest-index leaving basic variable."""
    while True:
        rc = _reduced_costs(tab, cost)
        basic = set(tab.basis)
        enter = next((j for j in range(allowed) if j not in basic and rc[j] > 0), None)
        if enter is None:
            return OPTIMAL
        leave = None
        best = None
        for i, row in enumerate(tab.rows):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and tab.basis[i] < tab.basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return UNBOUNDED
        tab.pivot(leave, enter)


@dataclass
class _StandardForm:
    system: LinearSystem
    A: list[list[Fraction]]
    b: list[Fraction]
    flipped: list[bool]
    # column j of the standard form contributes sign * x[var] (or a slack when var is None)
    columns: list[tuple[Optional[int], int]]


def _standard_form(system: LinearSystem) -> _StandardForm:
    columns: list[tuple[Optional[int], int]] = []
    for j, nn in enumerate(system.nonneg):
        columns.append((j, 1))
        if not nn:
            columns.append((j, -1))
    n_struct = len(columns)
    n_slack = len(system.le_rows)
    columns.extend((None, k) for k in range(n_slack))
    A, b, flipped = [], [], []
    for k, (a, rhs) in enumerate(list(system.eq_rows) + list(system.le_rows)):
        row = [sign * a[var] for var, sign in columns[:n_struct]]
        slack = [Fraction(0)] * n_slack
        if k >= len(system.eq_rows):
            slack[k - len(system.eq_rows)] = Fraction(1)
        row += slack
        flip = rhs < 0
        if flip:
            row = [-v for v in row]
            rhs = -rhs
        A.append(row)
        b.append(rhs)
        flipped.append(flip)
    return _StandardForm(system, A, b, flipped, columns)


def _phase_one(sf: _StandardForm) -> tuple[_Tableau, Optional[FarkasCertificate]]:
    n = len(sf.columns)
    m = len(sf.A)
    tab = _Tableau(sf.A, sf.b)
    if not m:
        return tab, None
    cost = [Fraction(0)] * n + [Fraction(-1)] * m
    _run(tab, cost, n)
    value = sum((tab.rows[i][-1] for i in range(m) if tab.basis[i] >= n), Fraction(0))
    if value > 0:
        pi = tab.multipliers(cost)
        y = [(-p if f else p) for p, f in zip(pi, sf.flipped)]
        ne = len(sf.system.eq_rows)
        cert = FarkasCertificate(tuple(y[:ne]), tuple(y[ne:]))
        if not verify_certificate(sf.system, cert):  # pragma: no cover - would be a solver bug
            raise AssertionError("phase one produced an invalid Farkas certificate")
        return tab, cert
    # drive artificial variables out of the basis where possible
    for i in range(m):
        if tab.basis[i] >= n:
            row = tab.rows[i]
            col = next((j for j in range(n) if row[j] != 0), None)
            if col is not None:
                tab.pivot(i, col)
    return tab, None


def _extract(sf: _StandardForm, tab: _Tableau) -> tuple[Fraction, ...]:
    n = len(sf.columns)
    values = [Fraction(0)] * n
    for i, j in enumerate(tab.basis):
        if j < n:
            values[j] = tab.rows[i][-1]
    x = [Fraction(0)] * sf.system.n_vars
    for (var, sign), v in zip(sf.columns, values):
        if var is not None and v:
            x[var] += sign * v
    return tuple(x)


def _coerce_objective(objective, n: int) -> tuple[tuple[Fraction, ...], Fraction]:
    if isinstance(objective, tuple) and len(objective) == 2 and not isinstance(objective[0], (int, Fraction)):
        coeffs, const = objective
    else:
        coeffs, const = objective, 0
    coeffs = as_rational_vector(coeffs)
    if len(coeffs) != n:
        raise ContractViolation(f"objective has {len(coeffs)} coefficients, system has {n} variables")
    return coeffs, Fraction(const)


def lp_maximize(objective, system: LinearSystem) -> LPResult:
    """Exact maximum of an affine objective over the system's feasible set.

    ``objective`` is either a coefficient vector or a ``(coefficients,
    constant)`` pair. Infeasible problems carry a Farkas certificate.
    ``duals`` holds the optimal multipliers of the equality rows followed by
    the inequality rows.
    """
    coeffs, const = _coerce_objective(objective, system.n_vars)
    sf = _standard_form(system)
    tab, cert = _phase_one(sf)
    if cert is not None:
        return LPResult(INFEASIBLE, certificate=cert)
    n = len(sf.columns)
    m = len(sf.A)
    cost = [coeffs[var] * sign if var is not None else Fraction(0) for var, sign in sf.columns]
    cost += [Fraction(0)] * m
    if m:
        status = _run(tab, cost, n)
    else:
        status = UNBOUNDED if any(c > 0 for c in cost[:n]) else OPTIMAL
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = _extract(sf, tab) if m else tuple(Fraction(0) for _ in range(system.n_vars))
    pi = tab.multipliers(cost) if m else []
    duals = tuple((-p if f else p) for p, f in zip(pi, sf.flipped))
    return LPResult(OPTIMAL, optimum=_dot(coeffs, x) + const, optimizer=x, duals=duals)


def lp_feasible(system: LinearSystem, method: str = "auto") -> LPResult:
    """A feasible point, or an exact Farkas certificate of infeasibility.

    ``method="phase1"`` runs the first simplex phase on the system itself.
    ``method="alternative"`` applies only to pure inequality systems over
    free variables: it solves the (much smaller) alternative problem
    ``min h.z  s.t.  G^T z = 0, sum z = 1, z >= 0``; a negative optimum makes
    ``z`` the certificate, otherwise the optimal multipliers give a point.
    ``auto`` picks the alternative when it applies and the system has more
    rows than twice its variables.
    """
    pure = not system.eq_rows and not any(system.nonneg)
    if method == "auto":
        method = "alternative" if pure and len(system.le_rows) > 2 * system.n_vars else "phase1"
    if method == "phase1":
        res = lp_maximize([0] * system.n_vars, system)
        return LPResult(res.status, optimizer=res.optimizer, certificate=res.certificate)
    if method != "alternative":
        raise ContractViolation(f"unknown method {method!r}")
    if not pure:
        raise ContractViolation("the alternative method needs free variables and only inequality rows")
    return _feasible_via_alternative(system)


def _feasible_via_alternative(system: LinearSystem) -> LPResult:
    m = len(system.le_rows)
    n = system.n_vars
    if m == 0:
        return LPResult(OPTIMAL, optimizer=(Fraction(0),) * n)
    eqs = [([system.le_rows[i][0][j] for i in range(m)], 0) for j in range(n)]
    eqs.append(([1] * m, 1))
    alt = LinearSystem(m, tuple(eqs))
    res = lp_maximize([-h for _, h in system.le_rows], alt)
    if res.status == INFEASIBLE:
        # no nonnegative row combination vanishes, so no certificate can exist; phase one finds the point
        return lp_feasible(system, method="phase1")
    if res.optimum > 0:
        cert = FarkasCertificate((), tuple(res.optimizer))
        if not verify_certificate(system, cert):  # pragma: no cover
            raise AssertionError("alternative produced an invalid certificate")
        return LPResult(INFEASIBLE, certificate=cert)
    point = tuple(-d for d in res.duals[:n])
    if not system.is_satisfied_by(point):  # pragma: no cover
        raise AssertionError("alternative multipliers are not a feasible point")
    return LPResult(OPTIMAL, optimizer=point)


# ---------------------------------------------------------------------------
# Vertex enumeration (double description)


def _primitive(v: Sequence[int]) -> tuple[int, ...]:
    g = 0
    for x in v:
        g = math.gcd(g, x)
    if g > 1:
        return tuple(x // g for x in v)
    return tuple(v)


def _integer_row(row: Sequence[Fraction]) -> tuple[int, ...]:
    den = 1
    for x in row:
        den = den * x.denominator // math.gcd(den, x.denominator)
    return _primitive([int(x * den) for x in row])


def _double_description(H: list[tuple[int, ...]], dim: int) -> list[tuple[int, ...]]:
    """Extreme rays of the pointed cone ``{y : H y >= 0}``."""
    # initial simplicial cone from ``dim`` independent rows
    chosen: list[int] = []
    for i in range(len(H)):
        if row_space_rank([H[k] for k in chosen + [i]]) == len(chosen) + 1:
            chosen.append(i)
            if len(chosen) == dim:
                break
    if len(chosen) < dim:
        raise UnboundedPolytope("feasible set contains a line")
    # rays: columns of the inverse of H[chosen]
    sub = [[Fraction(v) for v in H[i]] for i in chosen]
    aug = [row + [Fraction(int(r == c)) for c in range(dim)] for r, row in enumerate(sub)]
    red, _ = rref(aug)
    inv_cols = [[red[r][dim + c] for r in range(dim)] for c in range(dim)]
    rays = [_integer_row(col) for col in inv_cols]

    def dot(h, r):
        return sum(a * b for a, b in zip(h, r))

    processed = list(chosen)
    zero_sets = [frozenset(i for i in processed if dot(H[i], r) == 0) for r in rays]
    for i in range(len(H)):
        if i in chosen:
            continue
        h = H[i]
        vals = [dot(h, r) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        zer = [k for k, v in enumerate(vals) if v == 0]
        new_rays = [rays[k] for k in pos + zer]
        new_zero = [zero_sets[k] for k in pos] + [zero_sets[k] | {i} for k in zer]
        for p in pos:
            for q in neg:
                common = zero_sets[p] & zero_sets[q]
                if len(common) < dim - 2:
                    continue
                if any(k != p and k != q and common <= zero_sets[k] for k in range(len(rays))):
                    continue
                r = _primitive([vals[p] * b - vals[q] * a for a, b in zip(rays[p], rays[q])])
                new_rays.append(r)
                new_zero.append(common | {i})
        rays, zero_sets = new_rays, new_zero
        processed.append(i)
    return rays


def enumerate_vertices(system: LinearSystem) -> list[tuple[Fraction, ...]]:
    """All vertices of a bounded feasible set, sorted lexicographically.

    Raises :class:`UnboundedPolytope` if the set is unbounded. An infeasible
    system has no vertices.
    """
    n = system.n_vars
    aug = [list(a) + [b] for a, b in system.eq_rows]
    basis, pivots = rref(aug) if aug else ([], [])
    if n in pivots:
        return []
    # x = x0 + N t over the free (non-pivot) columns
    free = [j for j in range(n) if j not in set(pivots)]
    x0 = [Fraction(0)] * n
    for row, p in zip(basis, pivots):
        x0[p] = row[n]
    N = [[Fraction(0)] * len(free) for _ in range(n)]
    for k, f in enumerate(free):
        N[f][k] = Fraction(1)
    for row, p in zip(basis, pivots):
        for k, f in enumerate(free):
            N[p][k] = -row[f]
    dim = len(free) + 1
    # homogenized inequalities over y = (s, t): s*offset + g.t >= 0, and s >= 0
    H: list[tuple[int, ...]] = [_integer_row([Fraction(1)] + [Fraction(0)] * len(free))]
    for j in range(n):
        if system.nonneg[j]:
            H.append(_integer_row([x0[j]] + N[j]))
    for a, b in system.le_rows:
        off = b - _dot(a, x0)
        g = [-sum((a[j] * N[j][k] for j in range(n) if a[j]), Fraction(0)) for k in range(len(free))]
        H.append(_integer_row([off] + g))
    H = [h for h in H if any(h)]
    rays = _double_description(H, dim)
    vertices = set()
    for r in rays:
        s = r[0]
        if s == 0:
            raise UnboundedPolytope("feasible set has a recession direction")
        t = [Fraction(v, s) for v in r[1:]]
        vertices.add(tuple(x0[j] + _dot(N[j], t) for j in range(n)))
    return sorted(vertices)
