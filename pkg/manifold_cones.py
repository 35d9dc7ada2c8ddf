"""
4-manifold models and the cone predicates evaluated on them.

Every predicate returns a ConeVerdict. Cones are open: boundary classes
(square 0, zero pairing) are non-members, and a non-member verdict always
carries a certificate that can be re-evaluated with recheck_certificate.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Optional

from errors import HypothesisNotAsserted, InvariantViolation, KMismatch, MismatchedLattice, WrongBPlus
from lattice import (
    CohomClass,
    Covector,
    IntersectionLattice,
    as_fraction,
    format_class,
    fraction_to_json,
    pair,
    signature,
    square,
)

logger = logging.getLogger(__name__)


class ConeTableTag(str, Enum):
    T4 = "T4"
    PRIMARY_KODAIRA = "PrimaryKodaira"
    HYPERELLIPTIC = "Hyperelliptic"
    TYPE_D = "TypeD"
    TYPE_EH = "TypeEH"


class Scope(str, Enum):
    EXACT = "exact"
    UPPER_BOUND = "upper-bound-only"
    STORED_EXCEPTIONAL = "stored-exceptional-list"
    CONJECTURAL = "conjectural"


class RelativeShape(str, Enum):
    HALF_SPACE = "half-space"
    POSITIVE_CONE = "positive-cone"
    EMPTY = "empty"
    EXCEPTIONAL = "exceptional"
    UPPER_BOUND = "upper-bound"


# T^2-bundles over T^2: tag -> (b1, symplectic cone, relative cone of the fiber)
TABLE_ROWS = {
    ConeTableTag.T4: (4, "P", "P^F"),
    ConeTableTag.PRIMARY_KODAIRA: (3, "P", "P^F"),
    ConeTableTag.HYPERELLIPTIC: (2, "P", "P"),
    ConeTableTag.TYPE_D: (2, "P", "empty"),
    ConeTableTag.TYPE_EH: (2, "P", "P"),
}

_TABLE_SHAPES = {"P^F": RelativeShape.HALF_SPACE, "P": RelativeShape.POSITIVE_CONE, "empty": RelativeShape.EMPTY}


@dataclass(frozen=True)
class FourManifoldModel:
    """Second-cohomology model of a closed oriented 4-manifold"""

    name: str
    lattice: IntersectionLattice
    k_class: CohomClass
    exceptional: tuple = ()
    b_plus: int = 1
    b_one: int = 0
    minimal: bool = False
    fiber_class: Optional[CohomClass] = None
    cone_table_tag: Optional[ConeTableTag] = None
    half_space_certified: bool = False

    def __post_init__(self):
        object.__setattr__(self, "exceptional", tuple(self.exceptional))
        if self.cone_table_tag is not None:
            object.__setattr__(self, "cone_table_tag", ConeTableTag(self.cone_table_tag))

        # Every stored class lives on this lattice
        owned = [self.k_class, *self.exceptional]
        if self.fiber_class is not None:
            owned.append(self.fiber_class)
        for c in owned:
            if c.lattice != self.lattice:
                raise InvariantViolation("lattice", f"a class of {self.name} lives on another lattice")

        # Betti numbers
        if isinstance(self.b_plus, bool) or not isinstance(self.b_plus, int) or self.b_plus < 1:
            raise InvariantViolation("b_plus", f"b_plus must be a positive integer, got {self.b_plus!r}")
        if isinstance(self.b_one, bool) or not isinstance(self.b_one, int) or self.b_one < 0:
            raise InvariantViolation("b_one", f"b_one must be a nonnegative integer, got {self.b_one!r}")
        sig = signature(self.lattice)
        if sig.b_plus != self.b_plus:
            raise InvariantViolation("b_plus", f"declared {self.b_plus} but the form has b+ = {sig.b_plus}")

        # Squares of the distinguished classes
        for e in self.exceptional:
            if square(self.lattice, e) != -1:
                raise InvariantViolation("exceptional_square", f"{format_class(e)} does not have square -1")
        if self.minimal and self.exceptional:
            raise InvariantViolation("minimal", "a minimal model carries no exceptional class")
        if self.fiber_class is not None and square(self.lattice, self.fiber_class) != 0:
            raise InvariantViolation("fiber_square", "the fiber class must have square 0")
        if self.half_space_certified and self.fiber_class is None:
            raise InvariantViolation("half_space_certified", "certification needs a fiber class")

    @property
    def canonical_is_torsion(self):
        return self.k_class.is_zero()

    @cached_property
    def exceptional_conditions(self):
        """|alpha.E| > 0 for each stored exceptional class E"""
        return tuple(
            Inequality("|alpha.E| > 0 for E = {against}", "abs_pair", "> 0", e) for e in self.exceptional
        )

    def to_json(self):
        data = {
            "name": self.name,
            "b_plus": self.b_plus,
            "b_one": self.b_one,
            "minimal": self.minimal,
            "lattice": self.lattice.to_json(),
            "k_class": self.k_class.to_json(),
            "exceptional": [e.to_json() for e in self.exceptional],
        }
        if self.fiber_class is not None:
            data["fiber_class"] = self.fiber_class.to_json()
        if self.cone_table_tag is not None:
            data["cone_table_tag"] = self.cone_table_tag.value
        if self.half_space_certified:
            data["half_space_certified"] = True
        return data


@dataclass(frozen=True)
class Inequality:
    description: str  # may name the class paired against as {against}
    quantity: str  # "square", "pair" or "abs_pair"
    relation: str  # "> 0" or "!= 0"
    against: Optional[CohomClass] = None

    @property
    def text(self):
        if "{against}" not in self.description:
            return self.description
        return self.description.format(against=format_class(self.against))


@dataclass(frozen=True)
class ViolatedInequality:
    inequality: Inequality
    lhs: Fraction

    def is_violated(self):
        return not _holds(self.lhs, self.inequality.relation)

    def to_json(self):
        data = {
            "type": "ViolatedInequality",
            "description": self.inequality.text,
            "quantity": self.inequality.quantity,
            "lhs": fraction_to_json(self.lhs),
            "required": self.inequality.relation,
        }
        if self.inequality.against is not None:
            data["against"] = format_class(self.inequality.against)
        return data


@dataclass(frozen=True)
class SplitWitness:
    alpha_x: CohomClass
    alpha_y: CohomClass
    rho: Fraction

    def to_json(self):
        return {
            "type": "SplitWitness",
            "alpha_x": format_class(self.alpha_x),
            "alpha_y": format_class(self.alpha_y),
            "alpha_x_coeffs": self.alpha_x.to_json(),
            "alpha_y_coeffs": self.alpha_y.to_json(),
            "rho": fraction_to_json(self.rho),
        }


@dataclass(frozen=True)
class TableRow:
    tag: ConeTableTag
    cone: str

    def to_json(self):
        return {"type": "TableRow", "tag": self.tag.value, "cone": self.cone}


@dataclass(frozen=True)
class ConeVerdict:
    member: bool
    predicate: str
    scope: Scope
    certificate: object = None
    details: tuple = ()

    def __post_init__(self):
        if not self.member:
            empty_row = isinstance(self.certificate, TableRow) and self.certificate.cone == "empty"
            if not (isinstance(self.certificate, ViolatedInequality) or empty_row):
                raise InvariantViolation("verdict_certificate", "a non-member verdict needs a violated inequality")

    def to_json(self):
        return {
            "member": self.member,
            "predicate": self.predicate,
            "scope": self.scope.value,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "details": {name: fraction_to_json(v) if isinstance(v, Fraction) else v for name, v in self.details},
        }


def _on_model(model, *classes):
    for c in classes:
        if c.lattice is not model.lattice and c.lattice != model.lattice:
            raise MismatchedLattice(f"class does not live on the lattice of {model.name}")


def _holds(lhs, relation):
    if relation == "> 0":
        return lhs > 0
    if relation == "!= 0":
        return lhs != 0
    raise ValueError(f"unknown relation {relation!r}")


def _measure(model, alpha, inequality, against_alpha=None):
    if inequality.quantity == "square":
        return square(model.lattice, alpha)
    if against_alpha is None:
        value = pair(model.lattice, alpha, inequality.against)
    else:
        value = against_alpha(inequality.against)
    return abs(value) if inequality.quantity == "abs_pair" else value


def _evaluate(model, alpha, predicate, scope, inequalities, member_certificate=None, extra=()):
    against_alpha = Covector(model.lattice, alpha)
    details = []
    for inequality in inequalities:
        # |alpha.E| > 0 holds exactly when the integer numerator is nonzero
        if inequality.quantity == "abs_pair" and against_alpha.numerator(inequality.against):
            continue
        lhs = _measure(model, alpha, inequality, against_alpha)
        if inequality.quantity != "abs_pair":
            details.append((inequality.text, lhs))
        if not _holds(lhs, inequality.relation):
            return ConeVerdict(False, predicate, scope, ViolatedInequality(inequality, lhs), tuple(details) + extra)
    return ConeVerdict(True, predicate, scope, member_certificate, tuple(details) + extra)


_POSITIVE = Inequality("square(alpha) > 0", "square", "> 0")


def _pairing(beta, description="alpha.beta > 0"):
    return Inequality(description, "pair", "> 0", beta)


def positive_cone_contains(model, alpha):
    _on_model(model, alpha)
    return _evaluate(model, alpha, "positive", Scope.EXACT, [_POSITIVE])


def half_cone_contains(model, beta, alpha):
    """P^beta = {e in P : e.beta > 0}, with P^0 = P"""
    _on_model(model, beta, alpha)
    if beta.is_zero():
        return _evaluate(model, alpha, "half", Scope.EXACT, [_POSITIVE])
    return _evaluate(model, alpha, "half", Scope.EXACT, [_POSITIVE, _pairing(beta)])


def symplectic_cone_b1_contains(model, alpha):
    """b+ = 1: P minus the walls of the stored exceptional classes"""
    if model.b_plus != 1:
        raise WrongBPlus(f"{model.name} has b+ = {model.b_plus}")
    _on_model(model, alpha)
    scope = Scope.EXACT if model.minimal else Scope.STORED_EXCEPTIONAL
    return _evaluate(
        model, alpha, "symplectic:b+=1", scope,
        [_POSITIVE, *model.exceptional_conditions],
        extra=(("exceptional_checked", len(model.exceptional)),),
    )


def relative_cone_shape(model, v_dual):
    _on_model(model, v_dual)
    on_fiber = model.fiber_class is not None and v_dual == model.fiber_class
    if model.cone_table_tag is not None and on_fiber:
        return _TABLE_SHAPES[TABLE_ROWS[model.cone_table_tag][2]]
    if model.half_space_certified and on_fiber:
        return RelativeShape.HALF_SPACE
    if model.b_plus == 1:
        return RelativeShape.HALF_SPACE if model.minimal else RelativeShape.EXCEPTIONAL
    return RelativeShape.UPPER_BOUND


def relative_cone_contains(model, v_dual, alpha):
    """
    Relative symplectic cone of (M, V), dispatched in order: table row for
    the fiber, certified half-space for the fiber, the b+ = 1 formula, and
    otherwise only the upper bound {alpha in P : |alpha.E| > 0, alpha.V > 0}.
    """
    _on_model(model, v_dual, alpha)
    on_fiber = model.fiber_class is not None and v_dual == model.fiber_class
    towards_v = _pairing(v_dual, "alpha.V > 0")

    # Table row
    if model.cone_table_tag is not None and on_fiber:
        tag = model.cone_table_tag
        cone = TABLE_ROWS[tag][2]
        row = TableRow(tag, cone)
        if cone == "empty":
            return ConeVerdict(False, "relative:table", Scope.EXACT, row)
        conditions = [_POSITIVE, towards_v] if cone == "P^F" else [_POSITIVE]
        return _evaluate(model, alpha, "relative:table", Scope.EXACT, conditions, member_certificate=row)

    # Certified half-space
    if model.half_space_certified and on_fiber:
        return _evaluate(model, alpha, "relative:half-space", Scope.EXACT, [_POSITIVE, towards_v])

    # Exceptional walls, exact when b+ = 1
    conditions = [_POSITIVE, *model.exceptional_conditions, towards_v]
    extra = (("exceptional_checked", len(model.exceptional)),)
    if model.b_plus == 1:
        scope = Scope.EXACT if model.minimal else Scope.STORED_EXCEPTIONAL
        return _evaluate(model, alpha, "relative:b+=1", scope, conditions, extra=extra)

    logger.debug("%s has b+ = %d, relative cone reported as upper bound only", model.name, model.b_plus)
    return _evaluate(model, alpha, "relative:upper-bound-only", Scope.UPPER_BOUND, conditions, extra=extra)


def table_cone_contains(model, alpha):
    """Symplectic cone column of the T^2-bundle table (P_M on every row)"""
    if model.cone_table_tag is None:
        raise InvariantViolation("cone_table_tag", f"{model.name} has no table row")
    _on_model(model, alpha)
    row = TableRow(model.cone_table_tag, TABLE_ROWS[model.cone_table_tag][1])
    return _evaluate(model, alpha, "symplectic:table", Scope.EXACT, [_POSITIVE], member_certificate=row)


def conjecture_cone_contains(model, alpha):
    """P^{c1} u P^{-c1}, or P when the canonical class is torsion"""
    _on_model(model, alpha)
    if model.canonical_is_torsion:
        return _evaluate(model, alpha, "conjecture", Scope.EXACT, [_POSITIVE])
    against_k = Inequality("alpha.K != 0", "pair", "!= 0", model.k_class)
    return _evaluate(model, alpha, "conjecture", Scope.EXACT, [_POSITIVE, against_k])


def k_of_class(model, a):
    _on_model(model, a)
    return (square(model.lattice, a) - pair(model.lattice, model.k_class, a)) / 2


@dataclass(frozen=True)
class ProportionalCanonicalCone:
    """alpha -> membership in P^{c1} u P^{-c1}, built from the +V and -V half-cones"""

    model: FourManifoldModel
    v_dual: CohomClass
    a: Fraction

    def __call__(self, alpha):
        for beta in (self.v_dual, -self.v_dual):
            verdict = half_cone_contains(self.model, beta, alpha)
            if verdict.member:
                return replace(verdict, predicate="canonical-union")
        against_k = Inequality("alpha.K != 0", "pair", "!= 0", self.model.k_class)
        return _evaluate(self.model, alpha, "canonical-union", Scope.EXACT, [_POSITIVE, against_k])


def proportional_canonical_cone(model, v_dual, a, relative_shape_asserted=False):
    """
    Predicate for the symplectic cone when K = a.[V]^D and the relative cone
    of V is the half-space {alpha in P : alpha.V > 0} (caller asserts this).
    """
    if not relative_shape_asserted:
        raise HypothesisNotAsserted("the half-space shape of the relative cone of V must be asserted")
    _on_model(model, v_dual)
    a = as_fraction(a)
    if a == 0:
        raise KMismatch("the proportionality constant must be nonzero")
    if model.k_class != a * v_dual:
        raise KMismatch(f"K = {format_class(model.k_class)} is not {a} * ({format_class(v_dual)})")
    return ProportionalCanonicalCone(model, v_dual, a)


def _fiber_multiple(model):
    """a with K = a.F, or None"""
    f = model.fiber_class
    if f is None or f.is_zero() or model.k_class.is_zero():
        return None
    i = next(i for i, c in enumerate(f.coeffs) if c != 0)
    a = model.k_class.coeffs[i] / f.coeffs[i]
    return a if model.k_class == a * f else None


def symplectic_cone_contains(model, alpha):
    """Best available description of the symplectic cone of ``model``"""
    # Exact descriptions first
    if model.cone_table_tag is not None:
        return table_cone_contains(model, alpha)
    if model.b_plus == 1:
        return symplectic_cone_b1_contains(model, alpha)
    a = _fiber_multiple(model)
    if model.half_space_certified and model.minimal and a is not None:
        cone = proportional_canonical_cone(model, model.fiber_class, a, relative_shape_asserted=True)
        return replace(cone(alpha), predicate="symplectic:canonical-union")

    # Fall back to the conjectured cone
    return replace(conjecture_cone_contains(model, alpha), predicate="symplectic:conjecture", scope=Scope.CONJECTURAL)


def recheck_certificate(model, alpha, verdict):
    """Recompute a verdict's certificate from scratch; True if it still stands"""
    if verdict.member:
        return True
    cert = verdict.certificate
    if isinstance(cert, TableRow):
        return model.cone_table_tag == cert.tag and TABLE_ROWS[cert.tag][2] == "empty"
    lhs = _measure(model, alpha, cert.inequality)
    return lhs == cert.lhs and cert.is_violated()
