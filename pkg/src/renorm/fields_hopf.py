"""Hopf algebra of point-labelled field polynomials.

Field monomials are products of powers of a single scalar field placed at
labelled points, ``phi_1^{n_1} ... phi_k^{n_k}``.  Coefficients live in a
commutative ring of formal propagator monomials ``D(i, j)`` with exact
rational coefficients.  The module provides the coproduct, the counit, the
Laplace coupling, the star (operator) product, and vacuum expectation values
computed three independent ways.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

__all__ = [
    "AmplitudeExpr",
    "FieldMonomial",
    "FieldPoly",
    "GraphMatrix",
    "LabelOverlapError",
    "SingularConfigurationError",
    "TensorSum",
    "contraction_count",
    "coproduct",
    "counit",
    "enumerate_graphs",
    "eval_amplitude",
    "laplace",
    "laplace_recursive",
    "star",
    "star_chain",
    "vev",
    "vev_by_contraction",
    "vev_by_graphs",
    "vev_by_star_chain",
]

Prop = tuple[int, int]


class LabelOverlapError(ValueError):
    """Raised when two factors of a coupling share a point label."""


class SingularConfigurationError(ValueError):
    """Raised when a propagator is evaluated at coincident points."""


# ---------------------------------------------------------------------------
# Monomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class FieldMonomial:
    """Product of field powers at labelled points.

    Stored as a sorted tuple of ``(label, exponent)`` pairs with positive
    exponents, so equal monomials hash equally.  The empty tuple is the unit.
    """

    items: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        labels = [lab for lab, _ in self.items]
        if len(set(labels)) != len(labels):
            raise ValueError(f"repeated labels in monomial {self.items}")
        if any(e < 1 for _, e in self.items):
            raise ValueError(f"exponents must be positive: {self.items}")
        if list(self.items) != sorted(self.items):
            object.__setattr__(self, "items", tuple(sorted(self.items)))

    @classmethod
    def from_dict(cls, exponents: Mapping[int, int]) -> "FieldMonomial":
        return cls(tuple(sorted((int(k), int(v)) for k, v in exponents.items() if v)))

    @classmethod
    def power(cls, label: int, exponent: int) -> "FieldMonomial":
        return cls(((label, exponent),) if exponent else ())

    @property
    def exponents(self) -> dict[int, int]:
        return dict(self.items)

    @property
    def labels(self) -> frozenset[int]:
        return frozenset(lab for lab, _ in self.items)

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.items)

    def is_unit(self) -> bool:
        return not self.items

    def __mul__(self, other: "FieldMonomial") -> "FieldMonomial":
        if not other.items:
            return self
        if not self.items:
            return other
        if not (self.labels & other.labels):
            return FieldMonomial(tuple(sorted(self.items + other.items)))
        merged = Counter(self.exponents)
        merged.update(other.exponents)
        return FieldMonomial.from_dict(merged)

    def __str__(self) -> str:
        if not self.items:
            return "1"
        return "*".join(f"phi{lab}" + (f"^{e}" if e > 1 else "") for lab, e in self.items)


UNIT = FieldMonomial()


# ---------------------------------------------------------------------------
# Amplitudes: polynomials in propagator symbols
# ---------------------------------------------------------------------------


def _prop_key(props: Iterable[Prop]) -> tuple[Prop, ...]:
    return tuple(sorted(props))


@dataclass(frozen=True)
class AmplitudeExpr:
    """Polynomial in oriented propagator symbols ``D(i, j)`` over the rationals.

    ``terms`` maps a sorted tuple of propagators (a multiset) to its nonzero
    coefficient.  The empty tuple is the constant term.
    """

    terms: Mapping[tuple[Prop, ...], Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean: dict[tuple[Prop, ...], Fraction] = {}
        for props, coef in self.terms.items():
            for i, j in props:
                if i == j:
                    raise ValueError(f"self-propagator D({i},{i}) is not allowed")
            coef = Fraction(coef)
            if coef:
                key = _prop_key(props)
                clean[key] = clean.get(key, Fraction(0)) + coef
        object.__setattr__(self, "terms", {k: v for k, v in clean.items() if v})

    @classmethod
    def _clean(cls, terms: dict[tuple[Prop, ...], Fraction]) -> "AmplitudeExpr":
        """Wrap sorted keys and Fraction values without re-validating; zeros are dropped."""
        out = object.__new__(cls)
        object.__setattr__(out, "terms", {k: v for k, v in terms.items() if v})
        return out

    @classmethod
    def constant(cls, value: int | Fraction) -> "AmplitudeExpr":
        return cls({(): Fraction(value)})

    @classmethod
    def prop(cls, i: int, j: int, power: int = 1) -> "AmplitudeExpr":
        return cls({((i, j),) * power: Fraction(1)})

    @property
    def labels(self) -> frozenset[int]:
        return frozenset(lab for props in self.terms for p in props for lab in p)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "AmplitudeExpr") -> "AmplitudeExpr":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return AmplitudeExpr._clean(out)

    def __neg__(self) -> "AmplitudeExpr":
        return AmplitudeExpr._clean({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "AmplitudeExpr") -> "AmplitudeExpr":
        return self + (-other)

    def __mul__(self, other: "AmplitudeExpr | int | Fraction") -> "AmplitudeExpr":
        if not isinstance(other, AmplitudeExpr):
            if other == 1:
                return self
            return AmplitudeExpr._clean({k: v * other for k, v in self.terms.items()})
        if other.terms.keys() == {()}:
            return self * other.terms[()]
        if self.terms.keys() == {()}:
            return other * self.terms[()]
        out: dict[tuple[Prop, ...], Fraction] = defaultdict(Fraction)
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                out[_prop_key(k1 + k2)] += v1 * v2
        return AmplitudeExpr._clean(out)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = AmplitudeExpr.constant(other)
        if not isinstance(other, AmplitudeExpr):
            return NotImplemented
        return dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def symmetrized(self) -> "AmplitudeExpr":
        """Identify ``D(i, j)`` with ``D(j, i)`` (Euclidean stand-in propagators)."""
        return AmplitudeExpr(
            {_prop_key((min(p), max(p)) for p in props): c for props, c in self.terms.items()}
        )

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for props in sorted(self.terms):
            coef = self.terms[props]
            counts = Counter(props)
            factors = [
                f"D({i},{j})" + (f"^{n}" if n > 1 else "") for (i, j), n in sorted(counts.items())
            ]
            if not factors:
                parts.append(str(coef))
            elif coef == 1:
                parts.append("*".join(factors))
            elif coef == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"{coef}*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> list[dict]:
        return [
            {"props": [list(p) for p in props], "coef": str(coef)}
            for props, coef in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, data: Sequence[Mapping]) -> "AmplitudeExpr":
        return cls(
            {tuple(tuple(int(v) for v in p) for p in t["props"]): Fraction(t["coef"]) for t in data}
        )


ONE = AmplitudeExpr.constant(1)
ZERO = AmplitudeExpr()


# ---------------------------------------------------------------------------
# Field polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldPoly:
    """Finite sum of field monomials with amplitude-valued coefficients."""

    terms: Mapping[FieldMonomial, AmplitudeExpr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "terms", {m: a for m, a in self.terms.items() if not a.is_zero()}
        )

    @classmethod
    def monomial(cls, m: FieldMonomial | Mapping[int, int], coef: AmplitudeExpr | int = 1) -> "FieldPoly":
        if not isinstance(m, FieldMonomial):
            m = FieldMonomial.from_dict(m)
        if not isinstance(coef, AmplitudeExpr):
            coef = AmplitudeExpr.constant(coef)
        return cls({m: coef})

    @classmethod
    def power(cls, label: int, exponent: int) -> "FieldPoly":
        return cls.monomial(FieldMonomial.power(label, exponent))

    @property
    def labels(self) -> frozenset[int]:
        out: set[int] = set()
        for m, a in self.terms.items():
            out |= m.labels | a.labels
        return frozenset(out)

    @property
    def field_labels(self) -> frozenset[int]:
        return frozenset(lab for m in self.terms for lab in m.labels)

    def __add__(self, other: "FieldPoly") -> "FieldPoly":
        out = dict(self.terms)
        for m, a in other.terms.items():
            out[m] = out[m] + a if m in out else a
        return FieldPoly(out)

    def __sub__(self, other: "FieldPoly") -> "FieldPoly":
        return self + other.scale(AmplitudeExpr.constant(-1))

    def scale(self, amp: AmplitudeExpr) -> "FieldPoly":
        return FieldPoly({m: a * amp for m, a in self.terms.items()})

    def __mul__(self, other: "FieldPoly") -> "FieldPoly":
        """Commutative (normal-ordered) product."""
        out: dict[FieldMonomial, AmplitudeExpr] = {}
        for m1, a1 in self.terms.items():
            for m2, a2 in other.terms.items():
                m = m1 * m2
                out[m] = out[m] + a1 * a2 if m in out else a1 * a2
        return FieldPoly(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldPoly):
            return NotImplemented
        return dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def symmetrized(self) -> "FieldPoly":
        return FieldPoly({m: a.symmetrized() for m, a in self.terms.items()})

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(
            f"({a})" + ("" if m.is_unit() else f"*{m}") for m, a in sorted(self.terms.items())
        )

    def to_json(self) -> dict:
        return {
            "terms": [
                {"monomial": {str(k): v for k, v in m.items}, "amp": a.to_json()}
                for m, a in sorted(self.terms.items())
            ]
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: Mapping) -> "FieldPoly":
        out = FieldPoly()
        for term in data["terms"]:
            mono = FieldMonomial.from_dict({int(k): int(v) for k, v in term["monomial"].items()})
            out = out + FieldPoly({mono: AmplitudeExpr.from_json(term["amp"])})
        return out

    @classmethod
    def loads(cls, text: str) -> "FieldPoly":
        return cls.from_json(json.loads(text))


# ---------------------------------------------------------------------------
# Coproduct and counit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TensorSum:
    """Sweedler sum ``sum c * left (x) right`` over pairs of monomials."""

    terms: tuple[tuple[FieldMonomial, FieldMonomial, int], ...]

    def as_dict(self) -> dict[tuple[FieldMonomial, FieldMonomial], int]:
        out: dict[tuple[FieldMonomial, FieldMonomial], int] = defaultdict(int)
        for left, right, c in self.terms:
            out[left, right] += c
        return {k: v for k, v in out.items() if v}

    def __iter__(self) -> Iterator[tuple[FieldMonomial, FieldMonomial, int]]:
        return iter(self.terms)

    def total_mass(self) -> int:
        return sum(c for _, _, c in self.terms)


@lru_cache(maxsize=None)
def _coproduct_items(items: tuple[tuple[int, int], ...]) -> tuple[tuple[FieldMonomial, FieldMonomial, int], ...]:
    labels = [lab for lab, _ in items]
    ranges = [range(e + 1) for _, e in items]
    out = []
    for split in itertools.product(*ranges):
        coef = 1
        left, right = {}, {}
        for lab, (_, e), k in zip(labels, items, split):
            coef *= math.comb(e, k)
            left[lab] = e - k
            right[lab] = k
        out.append((FieldMonomial.from_dict(left), FieldMonomial.from_dict(right), coef))
    return tuple(out)


def coproduct(m: FieldMonomial) -> TensorSum:
    """Binomial coproduct of a monomial; each field is primitive."""
    return TensorSum(_coproduct_items(m.items))


def counit(p: FieldPoly | FieldMonomial) -> AmplitudeExpr:
    """Coefficient of the unit monomial."""
    if isinstance(p, FieldMonomial):
        return ONE if p.is_unit() else ZERO
    return p.terms.get(UNIT, ZERO)


# ---------------------------------------------------------------------------
# Laplace coupling
# ---------------------------------------------------------------------------


def _check_disjoint(a_labels: frozenset[int], b_labels: frozenset[int]) -> None:
    common = a_labels & b_labels
    if common:
        raise LabelOverlapError(f"label sets overlap on {sorted(common)}")


def _contingency_tables(rows: Sequence[int], cols: Sequence[int]) -> Iterator[list[list[int]]]:
    """Non-negative integer matrices with the given row and column sums."""
    if not rows:
        if all(c == 0 for c in cols):
            yield []
        return
    first, rest = rows[0], rows[1:]

    def fill(k: int, remaining: int, cols_left: list[int], row: list[int]) -> Iterator[list[int]]:
        if k == len(cols_left) - 1:
            if remaining <= cols_left[k]:
                yield row + [remaining]
            return
        for v in range(min(remaining, cols_left[k]), -1, -1):
            yield from fill(k + 1, remaining - v, cols_left, row + [v])

    if not cols:
        if first == 0:
            for tail in _contingency_tables(rest, cols):
                yield [[]] + tail
        return
    for row in fill(0, first, list(cols), []):
        new_cols = [c - v for c, v in zip(cols, row)]
        for tail in _contingency_tables(rest, new_cols):
            yield [row] + tail


@lru_cache(maxsize=None)
def _laplace_monomials(a_items: tuple[tuple[int, int], ...], b_items: tuple[tuple[int, int], ...]) -> AmplitudeExpr:
    if sum(e for _, e in a_items) != sum(e for _, e in b_items):
        return ZERO
    a_labels = [lab for lab, _ in a_items]
    b_labels = [lab for lab, _ in b_items]
    rows = [e for _, e in a_items]
    cols = [e for _, e in b_items]
    prefactor = math.prod(math.factorial(e) for e in rows) * math.prod(
        math.factorial(e) for e in cols
    )
    out: dict[tuple[Prop, ...], Fraction] = defaultdict(Fraction)
    for table in _contingency_tables(rows, cols):
        denom = 1
        props: list[Prop] = []
        for i, row in zip(a_labels, table):
            for j, m in zip(b_labels, row):
                denom *= math.factorial(m)
                props.extend([(i, j)] * m)
        out[_prop_key(props)] += Fraction(prefactor, denom)
    return AmplitudeExpr(out)


def laplace(a: FieldPoly | FieldMonomial, b: FieldPoly | FieldMonomial, *, symmetric: bool = False) -> AmplitudeExpr:
    """Laplace coupling ``(a | b)`` of polynomials over disjoint label sets.

    Each contraction of a field at ``i`` (left factor) with a field at ``j``
    (right factor) contributes the oriented symbol ``D(i, j)``.
    """
    if isinstance(a, FieldMonomial):
        a = FieldPoly.monomial(a)
    if isinstance(b, FieldMonomial):
        b = FieldPoly.monomial(b)
    _check_disjoint(a.field_labels, b.field_labels)
    total = ZERO
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            coupling = _laplace_monomials(ma.items, mb.items)
            if not coupling.is_zero():
                total = total + ca * cb * coupling
    return total.symmetrized() if symmetric else total


def laplace_recursive(a: FieldMonomial, b: FieldMonomial) -> AmplitudeExpr:
    """Laplace coupling from its defining rules, peeling one field at a time.

    Uses ``(1|B) = eps(B)``, ``(phi_i A | B) = sum (phi_i | B_(1)) (A | B_(2))``
    and ``(phi_i | phi_j) = D(i, j)``.  Independent of the closed form used by
    :func:`laplace`.
    """
    _check_disjoint(a.labels, b.labels)
    if a.is_unit():
        return counit(b)
    exps = a.exponents
    first = min(exps)
    exps[first] -= 1
    rest = FieldMonomial.from_dict(exps)
    total = ZERO
    for left, right, c in coproduct(b):
        if left.degree != 1:
            continue
        (j,) = left.labels
        total = total + AmplitudeExpr.prop(first, j) * laplace_recursive(rest, right) * c
    return total


# ---------------------------------------------------------------------------
# Star product
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _coproduct_by_degree(m: FieldMonomial) -> dict[int, list[tuple[FieldMonomial, FieldMonomial, int]]]:
    out: dict[int, list] = defaultdict(list)
    for left, right, c in coproduct(m):
        out[left.degree].append((left, right, c))
    return dict(out)


@lru_cache(maxsize=None)
def _star_monomials(ma: FieldMonomial, mb: FieldMonomial, symmetric: bool) -> FieldPoly:
    # every coefficient here is an integer; Fractions only appear on return
    out: dict[FieldMonomial, dict[tuple[Prop, ...], int]] = defaultdict(lambda: defaultdict(int))
    left_b = _coproduct_by_degree(mb)
    for a1, a2, ca in coproduct(ma):
        for b1, b2, cb in left_b.get(a1.degree, ()):
            coupling = _laplace_monomials(a1.items, b1.items)
            if coupling.is_zero():
                continue
            if symmetric:
                coupling = coupling.symmetrized()
            acc = out[a2 * b2]
            weight = ca * cb
            for key, coef in coupling.terms.items():
                acc[key] += coef.numerator * weight
    return FieldPoly(
        {m: AmplitudeExpr._clean({k: Fraction(v) for k, v in t.items()}) for m, t in out.items()}
    )


def star(a: FieldPoly, b: FieldPoly, *, symmetric: bool = False) -> FieldPoly:
    """Star product ``a * b = sum (a_(1) | b_(1)) a_(2) b_(2)``."""
    _check_disjoint(a.labels, b.labels)
    out: dict[FieldMonomial, dict[tuple[Prop, ...], Fraction]] = defaultdict(lambda: defaultdict(Fraction))
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            scale = ca * cb
            for m, amp in _star_monomials(ma, mb, symmetric).terms.items():
                acc = out[m]
                for key, coef in (amp * scale).terms.items():
                    acc[key] += coef
    return FieldPoly({m: AmplitudeExpr._clean(dict(t)) for m, t in out.items()})


def star_chain(factors: Sequence[FieldPoly], *, symmetric: bool = False) -> FieldPoly:
    """Left-associated product ``((f1 * f2) * f3) * ...``."""
    if not factors:
        return FieldPoly.monomial(UNIT)
    acc = factors[0]
    for f in factors[1:]:
        acc = star(acc, f, symmetric=symmetric)
    return acc


# ---------------------------------------------------------------------------
# Vacuum expectation values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphMatrix:
    """Symmetric adjacency matrix of a vacuum graph with prescribed valences."""

    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.matrix)
        for i in range(n):
            if self.matrix[i][i]:
                raise ValueError("graph matrix must have zero diagonal")
            for j in range(n):
                if self.matrix[i][j] != self.matrix[j][i]:
                    raise ValueError("graph matrix must be symmetric")
                if self.matrix[i][j] < 0:
                    raise ValueError("graph matrix entries must be non-negative")

    @property
    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(r) for r in self.matrix)

    def upper(self) -> tuple[int, ...]:
        n = len(self.matrix)
        return tuple(self.matrix[i][j] for i in range(n) for j in range(i + 1, n))


def enumerate_graphs(p: Sequence[int]) -> list[GraphMatrix]:
    """All symmetric zero-diagonal matrices with row sums ``p``.

    Entries above the diagonal are filled row by row; results come out in
    lexicographic order of the upper-triangular entry vector.
    """
    n = len(p)
    if any(v < 0 for v in p):
        raise ValueError("row sums must be non-negative")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    # for pruning: how much capacity row i can still receive from later pairs
    results: list[GraphMatrix] = []
    remaining = list(p)

    def later_capacity(idx: int, row: int) -> int:
        cap = 0
        for i, j in pairs[idx:]:
            if i == row:
                cap += remaining[j]
            elif j == row:
                cap += remaining[i]
        return cap

    entries = [0] * len(pairs)

    def rec(idx: int) -> None:
        if idx == len(pairs):
            if all(r == 0 for r in remaining):
                m = [[0] * n for _ in range(n)]
                for (i, j), v in zip(pairs, entries):
                    m[i][j] = m[j][i] = v
                results.append(GraphMatrix(tuple(tuple(r) for r in m)))
            return
        i, j = pairs[idx]
        # row i gets no further pairs once we pass its last column
        last_for_i = j == n - 1
        hi = min(remaining[i], remaining[j])
        lo = remaining[i] if last_for_i else 0
        for v in range(lo, hi + 1):
            remaining[i] -= v
            remaining[j] -= v
            entries[idx] = v
            if later_capacity(idx + 1, i) >= remaining[i]:
                rec(idx + 1)
            remaining[i] += v
            remaining[j] += v
        entries[idx] = 0

    if n == 1:
        return [GraphMatrix(((0,),))] if p[0] == 0 else []
    rec(0)
    return results


def vev_by_graphs(p: Sequence[int]) -> AmplitudeExpr:
    """``p_1! ... p_n! sum_m prod_{i<j} D(i,j)^{m_ij} / m_ij!`` over graph matrices."""
    prefactor = math.prod(math.factorial(v) for v in p)
    out: dict[tuple[Prop, ...], Fraction] = defaultdict(Fraction)
    n = len(p)
    for g in enumerate_graphs(p):
        denom = 1
        props: list[Prop] = []
        for i in range(n):
            for j in range(i + 1, n):
                m = g.matrix[i][j]
                denom *= math.factorial(m)
                props.extend([(i + 1, j + 1)] * m)
        out[_prop_key(props)] += Fraction(prefactor, denom)
    return AmplitudeExpr(out)


def vev_by_star_chain(p: Sequence[int]) -> AmplitudeExpr:
    """Counit of the left-associated chain ``phi_1^{p_1} * ... * phi_n^{p_n}``."""
    return counit(star_chain([FieldPoly.power(i + 1, v) for i, v in enumerate(p)]))


@lru_cache(maxsize=None)
def _contract(counts: tuple[int, ...]) -> AmplitudeExpr:
    first = next((i for i, c in enumerate(counts) if c), None)
    if first is None:
        return ONE
    total = ZERO
    for j in range(first + 1, len(counts)):
        if counts[j] == 0:
            continue
        rest = list(counts)
        rest[first] -= 1
        rest[j] -= 1
        sub = _contract(tuple(rest))
        if not sub.is_zero():
            total = total + AmplitudeExpr.prop(first + 1, j + 1) * sub * counts[j]
    return total


def vev_by_contraction(p: Sequence[int]) -> AmplitudeExpr:
    """Wick contraction count: pair the first open leg with every admissible partner.

    Legs at the same point never pair (normal ordering), so each perfect
    matching of distinguishable legs is generated exactly once.
    """
    return _contract(tuple(p))


def contraction_count(p: Sequence[int]) -> int:
    """Number of perfect matchings of labelled legs with no self-contractions."""
    return int(sum(vev_by_contraction(p).terms.values()))


def vev(p: Sequence[int]) -> AmplitudeExpr:
    """Vacuum expectation value of ``phi^{p_1}(x_1) * ... * phi^{p_n}(x_n)``.

    Computed from the graph-matrix formula and checked against the counit of
    the star chain; the two must agree exactly.
    """
    if len(p) < 1:
        raise ValueError("need at least one point")
    by_graphs = vev_by_graphs(p)
    by_chain = vev_by_star_chain(p)
    if by_graphs != by_chain:
        raise ArithmeticError(f"graph formula and star chain disagree for p={tuple(p)}")
    return by_graphs


# ---------------------------------------------------------------------------
# Numerical evaluation
# ---------------------------------------------------------------------------


def eval_amplitude(
    a: AmplitudeExpr,
    cfg: Mapping[int, Sequence[float]] | Sequence[Sequence[float]],
    prop: Callable[[Sequence[float], Sequence[float]], complex],
) -> complex:
    """Substitute ``prop(x_i, x_j)`` for each ``D(i, j)`` and sum.

    ``cfg`` is either a mapping from label to point or a sequence indexed from
    label 1.
    """
    if not isinstance(cfg, Mapping):
        cfg = {i + 1: x for i, x in enumerate(cfg)}
    cache: dict[Prop, complex] = {}
    total: complex = 0
    for props, coef in a.terms.items():
        value: complex = 1
        for i, j in props:
            if (i, j) not in cache:
                if i not in cfg or j not in cfg:
                    raise KeyError(f"label missing from configuration: D({i},{j})")
                xi, xj = cfg[i], cfg[j]
                if tuple(xi) == tuple(xj):
                    raise SingularConfigurationError(f"points {i} and {j} coincide")
                cache[i, j] = prop(xi, xj)
            value *= cache[i, j]
        total += float(coef) * value
    return total
