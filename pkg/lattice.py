"""
Exact integral/rational bilinear-form arithmetic.

An IntersectionLattice is a labelled basis with an integral symmetric Gram
matrix; a CohomClass is a vector of exact rationals over that basis. Nothing
here touches floating point: scalars are fractions.Fraction and matrix work
that needs more than a dot product goes through sympy.
"""

import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import sympy
from sympy.matrices.normalforms import hermite_normal_form

from errors import (
    ClassExpressionError,
    InvariantViolation,
    MismatchedLattice,
    NotUnimodular,
    SchemaError,
)

logger = logging.getLogger(__name__)


def as_fraction(value):
    """Coerce an int, Fraction, "p/q" string or [p, q] pair to a Fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise SchemaError(f"expected a rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (list, tuple)):
        if len(value) != 2 or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise SchemaError(f"rational must be [numerator, denominator], got {value!r}")
        num, den = value
        if den <= 0:
            raise SchemaError(f"denominator must be positive in {value!r}")
        if math.gcd(num, den) != 1:
            raise SchemaError(f"rational {value!r} is not reduced")
        return Fraction(num, den)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"cannot read rational {value!r}") from exc
    raise SchemaError(f"expected a rational, got {value!r}")


def fraction_to_json(value):
    return [value.numerator, value.denominator]


def _to_fraction(entry):
    # sympy Integer/Rational both expose p and q
    entry = sympy.Rational(entry)
    return Fraction(int(entry.p), int(entry.q))


def _to_sympy(value):
    value = as_fraction(value)
    return sympy.Rational(value.numerator, value.denominator)


@dataclass(frozen=True)
class IntersectionLattice:
    """Free abelian group with an integral symmetric Gram matrix"""

    gram: tuple
    labels: tuple

    def __post_init__(self):
        # Integer entries
        rows = []
        for row in self.gram:
            for entry in row:
                if isinstance(entry, bool) or not isinstance(entry, int):
                    raise InvariantViolation("integrality", f"Gram entry {entry!r} is not an integer")
            rows.append(tuple(row))
        gram = tuple(rows)
        labels = tuple(str(label) for label in self.labels)
        n = len(gram)

        # Shape and symmetry
        if n == 0:
            raise InvariantViolation("rank", "rank must be positive")
        if any(len(row) != n for row in gram):
            raise InvariantViolation("square", "Gram matrix must be rank x rank")
        for i in range(n):
            for j in range(i + 1, n):
                if gram[i][j] != gram[j][i]:
                    raise InvariantViolation("symmetry", f"gram[{i}][{j}] != gram[{j}][{i}]")

        # Labels
        if len(labels) != n:
            raise InvariantViolation("labels", f"{len(labels)} labels for rank {n}")
        if len(set(labels)) != n:
            raise InvariantViolation("distinct_labels", "basis labels must be pairwise distinct")

        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "labels", labels)

    @property
    def rank(self):
        return len(self.gram)

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise ClassExpressionError(f"unknown basis label {label!r}") from None

    def zero(self):
        return CohomClass((0,) * self.rank, self)

    def basis_class(self, label):
        i = label if isinstance(label, int) else self.index(label)
        coeffs = [0] * self.rank
        coeffs[i] = 1
        return CohomClass(coeffs, self)

    def to_json(self):
        return {"rank": self.rank, "labels": list(self.labels), "gram": [list(row) for row in self.gram]}

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict):
            raise SchemaError("lattice must be a JSON object")
        for key in ("rank", "labels", "gram"):
            if key not in data:
                raise SchemaError(f"lattice is missing {key!r}")
        if not isinstance(data["gram"], list) or not all(isinstance(row, list) for row in data["gram"]):
            raise SchemaError("lattice gram must be a list of lists")
        if not isinstance(data["labels"], list):
            raise SchemaError("lattice labels must be a list")
        lattice = cls(tuple(tuple(row) for row in data["gram"]), tuple(data["labels"]))
        if data["rank"] != lattice.rank:
            raise InvariantViolation("rank", f"declared rank {data['rank']} but Gram has rank {lattice.rank}")
        return lattice


@dataclass(frozen=True)
class CohomClass:
    """Exact rational coefficient vector over the basis of ``lattice``"""

    coeffs: tuple
    lattice: IntersectionLattice

    def __post_init__(self):
        coeffs = tuple(as_fraction(c) for c in self.coeffs)
        if len(coeffs) != self.lattice.rank:
            raise MismatchedLattice(f"class has {len(coeffs)} coefficients, lattice rank is {self.lattice.rank}")
        object.__setattr__(self, "coeffs", coeffs)

    def _check(self, other):
        if not isinstance(other, CohomClass):
            return NotImplemented
        if other.lattice is not self.lattice and other.lattice != self.lattice:
            raise MismatchedLattice("classes live on different lattices")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return CohomClass(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.lattice)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return CohomClass(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.lattice)

    def __neg__(self):
        return CohomClass(tuple(-a for a in self.coeffs), self.lattice)

    def __mul__(self, scalar):
        if isinstance(scalar, CohomClass):
            return NotImplemented
        scalar = as_fraction(scalar)
        return CohomClass(tuple(scalar * a for a in self.coeffs), self.lattice)

    __rmul__ = __mul__

    def is_zero(self):
        return not any(self.coeffs)

    def is_integral(self):
        return all(c.denominator == 1 for c in self.coeffs)

    @cached_property
    def integral_terms(self):
        """(d, ((i, d * c_i), ...)) over the nonzero coefficients, d the common denominator"""
        d = math.lcm(*(c.denominator for c in self.coeffs))
        return d, tuple((i, int(c * d)) for i, c in enumerate(self.coeffs) if c)

    def coefficient(self, label):
        return self.coeffs[self.lattice.index(label)]

    def to_json(self):
        return [fraction_to_json(c) for c in self.coeffs]

    def __str__(self):
        return format_class(self)


@dataclass(frozen=True)
class Signature:
    b_plus: int
    b_minus: int
    b_zero: int

    @property
    def index(self):
        return self.b_plus - self.b_minus

    def to_json(self):
        return {"b_plus": self.b_plus, "b_minus": self.b_minus, "b_zero": self.b_zero}


def hyperbolic_plane(labels=("e", "f")):
    return IntersectionLattice(((0, 1), (1, 0)), tuple(labels))


# E8 Dynkin diagram: chain 1-3-4-5-6-7-8 with node 2 attached to node 4
_E8_EDGES = ((0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3))


def negative_e8(prefix="e"):
    gram = [[0] * 8 for _ in range(8)]
    for i in range(8):
        gram[i][i] = -2
    for i, j in _E8_EDGES:
        gram[i][j] = gram[j][i] = 1
    return IntersectionLattice(tuple(tuple(row) for row in gram), tuple(f"{prefix}{i + 1}" for i in range(8)))


def diagonal(entries, labels):
    n = len(entries)
    gram = tuple(tuple(entries[i] if i == j else 0 for j in range(n)) for i in range(n))
    return IntersectionLattice(gram, tuple(labels))


def direct_sum(*lattices, labels=None):
    """Orthogonal sum; labels default to the concatenated summand labels"""
    n = sum(lattice.rank for lattice in lattices)
    gram = [[0] * n for _ in range(n)]
    offset = 0
    for lattice in lattices:
        for i, row in enumerate(lattice.gram):
            for j, entry in enumerate(row):
                gram[offset + i][offset + j] = entry
        offset += lattice.rank
    if labels is None:
        labels = [label for lattice in lattices for label in lattice.labels]
    return IntersectionLattice(tuple(tuple(row) for row in gram), tuple(labels))


def _owned(lattice, *classes):
    for c in classes:
        if c.lattice is not lattice and c.lattice != lattice:
            raise MismatchedLattice(f"class of rank {c.lattice.rank} does not belong to this lattice")


def pair(lattice, a, b):
    """a^T . gram . b, exact"""
    _owned(lattice, a, b)
    # integer numerators over the common denominators of a and b
    da, a_terms = a.integral_terms
    db, b_terms = b.integral_terms
    total = 0
    for i, ai in a_terms:
        row = lattice.gram[i]
        total += ai * sum(row[j] * bj for j, bj in b_terms)
    return Fraction(total, da * db)


def square(lattice, a):
    return pair(lattice, a, a)


class Covector:
    """The linear form b -> a.b for a fixed class a, held as an integer row"""

    def __init__(self, lattice, a):
        _owned(lattice, a)
        self.lattice = lattice
        self.scale, terms = a.integral_terms
        self.row = tuple(sum(gram_row[i] * ai for i, ai in terms) for gram_row in lattice.gram)

    def numerator(self, b):
        """An integer with the sign of a.b"""
        _owned(self.lattice, b)
        _, terms = b.integral_terms
        return sum(self.row[j] * bj for j, bj in terms)

    def __call__(self, b):
        _owned(self.lattice, b)
        d, terms = b.integral_terms
        return Fraction(sum(self.row[j] * bj for j, bj in terms), self.scale * d)


def diagonalize(gram):
    """
    Exact symmetric Gaussian elimination over the rationals.

    Pivot on the first nonzero diagonal entry among the remaining indices;
    when the remaining diagonal is zero but some q_ij is not, replace e_i by
    e_i + e_j first. Returns the diagonal entries in pivot order, with the
    zero block appended.
    """
    q = [[Fraction(entry) for entry in row] for row in gram]
    active = list(range(len(q)))
    diag = []

    # Eliminate one pivot at a time
    while active:
        pivot = next((i for i in active if q[i][i] != 0), None)
        if pivot is None:
            hit = next(((i, j) for i in active for j in active if i != j and q[i][j] != 0), None)
            if hit is None:
                break
            i, j = hit
            # e_i -> e_i + e_j
            for k in range(len(q)):
                q[i][k] += q[j][k]
            for k in range(len(q)):
                q[k][i] += q[k][j]
            pivot = i

        d = q[pivot][pivot]
        for r in active:
            if r == pivot or q[r][pivot] == 0:
                continue
            factor = q[r][pivot] / d
            for k in range(len(q)):
                q[r][k] -= factor * q[pivot][k]
            for k in range(len(q)):
                q[k][r] -= factor * q[k][pivot]
        diag.append(d)
        active.remove(pivot)

    diag.extend(Fraction(0) for _ in active)
    return diag


def signature(lattice):
    diag = diagonalize(lattice.gram)
    plus = sum(1 for d in diag if d > 0)
    minus = sum(1 for d in diag if d < 0)
    return Signature(plus, minus, lattice.rank - plus - minus)


def sylvester_signature(lattice):
    """b+ - b- from the sign changes of leading principal minors, None if one vanishes"""
    g = sympy.Matrix(lattice.gram)
    previous = sympy.Integer(1)
    changes = 0
    for k in range(1, lattice.rank + 1):
        minor = g[:k, :k].det()
        if minor == 0:
            return None
        if (minor > 0) != (previous > 0):
            changes += 1
        previous = minor
    return lattice.rank - 2 * changes


def change_basis(lattice, unimodular, labels=None):
    """Gram' = U^T . gram . U; the columns of U are the new basis vectors"""
    # Validate U
    u = sympy.Matrix(unimodular)
    if u.shape != (lattice.rank, lattice.rank):
        raise MismatchedLattice(f"basis change of shape {u.shape} for rank {lattice.rank}")
    if any(not entry.is_integer for entry in u):
        raise NotUnimodular("basis change must be an integer matrix")
    det = u.det()
    if abs(det) != 1:
        raise NotUnimodular(f"determinant {det} is not +-1")

    # New Gram
    new_gram = u.T * sympy.Matrix(lattice.gram) * u
    gram = tuple(tuple(int(new_gram[i, j]) for j in range(lattice.rank)) for i in range(lattice.rank))
    return IntersectionLattice(gram, tuple(labels) if labels is not None else lattice.labels)


def inverse_matrix(rows):
    """Exact inverse of a square rational matrix as Fraction rows, None if singular"""
    if not rows:
        return ()
    m = sympy.Matrix([[_to_sympy(x) for x in row] for row in rows])
    if m.det() == 0:
        return None
    inverse = m.inv()
    return tuple(tuple(_to_fraction(inverse[i, j]) for j in range(m.cols)) for i in range(m.rows))


def solve_coordinates(vectors, target):
    """Exact coefficients expressing target in the span of vectors, or None"""
    if not vectors:
        return [] if not any(target) else None
    a = sympy.Matrix([[_to_sympy(v[i]) for v in vectors] for i in range(len(target))])
    b = sympy.Matrix([_to_sympy(t) for t in target])
    try:
        solution, params = a.gauss_jordan_solve(b)
    except ValueError:
        return None
    if params.shape[0]:
        solution = solution.xreplace({p: 0 for p in params})
    return [_to_fraction(entry) for entry in solution]


def integral_basis(generators):
    """Basis of the lattice spanned by integral generators"""
    nonzero = [tuple(int(x) for x in g) for g in generators if any(g)]
    if not nonzero:
        return []

    # Greedy: keep generators that raise the rank
    picked = []
    for g in nonzero:
        if sympy.Matrix(picked + [g]).rank() == len(picked) + 1:
            picked.append(g)

    # Every generator must have integral coordinates over the picked ones
    greedy_ok = True
    for g in nonzero:
        if g in picked:
            continue
        coords = solve_coordinates(picked, g)
        if coords is None or any(c.denominator != 1 for c in coords):
            greedy_ok = False
            break
    if greedy_ok:
        return picked

    logger.debug("greedy generator choice is not a basis, falling back to Hermite normal form")
    hnf = hermite_normal_form(sympy.Matrix(nonzero).T)
    columns = [tuple(int(hnf[i, j]) for i in range(hnf.rows)) for j in range(hnf.cols)]
    return [c for c in columns if any(c)]


_TERM = re.compile(r"\s*([+-])?\s*(?:(\d+)(?:\s*/\s*(\d+))?\s*\*?\s*)?([A-Za-z_][A-Za-z0-9_]*)\s*")


def parse_class(lattice, text):
    """
    Read a class literal such as ``2F+G``, ``3/2*x1 - G`` or ``0``.

    term = [coef ["/" den] ["*"]] label, joined by "+" or "-".
    """
    if not isinstance(text, str) or not text.strip():
        raise ClassExpressionError("empty class expression")
    if text.strip() == "0":
        return lattice.zero()

    # Read terms left to right
    coeffs = [Fraction(0)] * lattice.rank
    pos = 0
    first = True
    while pos < len(text):
        match = _TERM.match(text, pos)
        if match is None or match.end() == pos:
            raise ClassExpressionError(f"cannot parse class expression at {text[pos:]!r}")
        sign, num, den, label = match.groups()
        if sign is None and not first:
            raise ClassExpressionError(f"missing '+' or '-' before {label!r}")
        coef = Fraction(int(num) if num else 1)
        if den is not None:
            if int(den) == 0:
                raise ClassExpressionError("zero denominator in class expression")
            coef /= int(den)
        if sign == "-":
            coef = -coef
        coeffs[lattice.index(label)] += coef
        pos = match.end()
        first = False
    return CohomClass(coeffs, lattice)


def format_class(c):
    terms = []
    for coef, label in zip(c.coeffs, c.lattice.labels):
        if coef == 0:
            continue
        magnitude = abs(coef)
        body = label if magnitude == 1 else f"{magnitude}*{label}"
        terms.append(("-" if coef < 0 else "+") + body)
    if not terms:
        return "0"
    text = "".join(terms)
    return text[1:] if text.startswith("+") else text
