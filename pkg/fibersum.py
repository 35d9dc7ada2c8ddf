"""
Fiber sums X #_V Y along a square-zero class V with trivial normal bundle.

build_sum assembles the second cohomology of the sum over a role-tagged
basis: the fiber F, the section class Gamma (pairing 1 with F), the classes
of X and of Y supported away from V, and the rim/tau hyperbolic pairs of a
non-good sum. split_class and push_sum_class move classes between the sum
and its two summands without changing the volume.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Optional

try:
    from sympy.core.intfunc import igcdex
except ImportError:
    from sympy import igcdex

from errors import (
    HypothesisNotEstablished,
    InvariantViolation,
    MatchingFailure,
    MismatchedLattice,
    NoDualClass,
    NonPositiveG,
    NonPositiveSquare,
    NotGood,
    NotSquareZero,
    RhoOutOfRange,
    UnexpandableClass,
    WitnessRejected,
)
from lattice import (
    CohomClass,
    IntersectionLattice,
    as_fraction,
    format_class,
    integral_basis,
    inverse_matrix,
    pair,
    signature,
    solve_coordinates,
    square,
)
from manifold_cones import (
    ConeVerdict,
    FourManifoldModel,
    Inequality,
    RelativeShape,
    Scope,
    SplitWitness,
    ViolatedInequality,
    relative_cone_contains,
    relative_cone_shape,
)

logger = logging.getLogger(__name__)


def _is_count(value):
    return isinstance(value, int) and not isinstance(value, bool) and value >= 0


def _belongs(lattice, c, what):
    if c.lattice is not lattice and c.lattice != lattice:
        raise MismatchedLattice(f"{what} does not live on the expected lattice")


@dataclass(frozen=True)
class FiberSumSpec:
    x_model: FourManifoldModel
    y_model: FourManifoldModel
    v_in_x: CohomClass
    v_in_y: CohomClass
    v_genus: int = 1
    h1_injects_into_y: bool = False
    rim_rank: int = 0
    tau_rank: int = 0

    def __post_init__(self):
        _belongs(self.x_model.lattice, self.v_in_x, "v_in_x")
        _belongs(self.y_model.lattice, self.v_in_y, "v_in_y")
        for side, model, v in (("x", self.x_model, self.v_in_x), ("y", self.y_model, self.v_in_y)):
            sq = square(model.lattice, v)
            if sq != 0:
                raise NotSquareZero(f"v_in_{side} = {format_class(v)} has square {sq}, V needs a trivial normal bundle")
        for field in ("v_genus", "rim_rank", "tau_rank"):
            if not _is_count(getattr(self, field)):
                raise InvariantViolation(field, "must be a nonnegative integer")
        if self.rim_rank != self.tau_rank:
            raise InvariantViolation("rim_tau_rank", "rim and tau classes come in hyperbolic pairs")
        if self.h1_injects_into_y and self.rim_rank:
            raise InvariantViolation("no_rim_tori", "H1(V) -> H1(Y) injective leaves no rim tori")
        if self.rim_rank > 2 * self.v_genus:
            raise InvariantViolation("rim_rank_bound", f"rim_rank is at most b1(V) = {2 * self.v_genus}")


class Role(str, Enum):
    F = "F"
    GAMMA = "Gamma"
    X = "X"
    Y = "Y"
    RIM = "Rim"
    TAU = "Tau"


@dataclass(frozen=True)
class BasisRole:
    role: Role
    label: str
    maps_to_x: Optional[CohomClass] = None
    maps_to_y: Optional[CohomClass] = None

    def to_json(self, index):
        return {
            "index": index,
            "label": self.label,
            "role": self.role.value,
            "x": None if self.maps_to_x is None else self.maps_to_x.to_json(),
            "y": None if self.maps_to_y is None else self.maps_to_y.to_json(),
        }


@dataclass(frozen=True)
class GluedBasis:
    lattice: IntersectionLattice
    roles: tuple
    gamma_x: CohomClass
    gamma_y: CohomClass
    x_block: tuple
    y_block: tuple
    x_inverse: Optional[tuple] = None  # inverse Gram of x_block, None if singular
    y_inverse: Optional[tuple] = None

    @property
    def fiber(self):
        return self.lattice.basis_class(0)

    @property
    def gamma(self):
        return self.lattice.basis_class(1)

    @property
    def x_offset(self):
        return 2

    @property
    def y_offset(self):
        return 2 + len(self.x_block)

    def indices(self, role):
        return [i for i, r in enumerate(self.roles) if r.role == role]

    def to_json(self):
        return [r.to_json(i) for i, r in enumerate(self.roles)]


@dataclass(frozen=True)
class GoodnessReport:
    good: bool
    reason: str

    def to_json(self):
        return {"good": self.good, "reason": self.reason}


@dataclass(frozen=True)
class SumStage:
    index: int
    spec: FiberSumSpec
    model: FourManifoldModel
    basis: GluedBasis


def check_good(spec):
    if spec.h1_injects_into_y:
        return GoodnessReport(True, "H1(V) -> H1(Y) is injective: Y has no rim tori and tau = 0")
    if spec.rim_rank == 0 and spec.tau_rank == 0:
        return GoodnessReport(True, "rim_rank = tau_rank = 0 supplied directly")
    return GoodnessReport(
        False,
        f"rim_rank = {spec.rim_rank}, tau_rank = {spec.tau_rank}: phi is not surjective and psi is not injective",
    )


def dual_class(lattice, v):
    """
    Integral class gamma with gamma.v = 1.

    Takes +-e_i for the first i with |e_i.v| = 1, otherwise folds the
    extended gcd over e_1.v, e_2.v, ... in index order.
    """
    if not v.is_integral():
        raise NoDualClass(f"{format_class(v)} is not integral")
    w = [int(pair(lattice, lattice.basis_class(i), v)) for i in range(lattice.rank)]

    for i, wi in enumerate(w):
        if abs(wi) == 1:
            return wi * lattice.basis_class(i)

    coeffs = [0] * lattice.rank
    acc = 0
    for i, wi in enumerate(w):
        if wi == 0:
            continue
        if acc == 0:
            acc = abs(wi)
            coeffs[i] = 1 if wi > 0 else -1
            continue
        s, t, d = (int(x) for x in igcdex(acc, wi))
        coeffs = [s * c for c in coeffs]
        coeffs[i] += t
        acc = d
    if acc != 1:
        raise NoDualClass(f"{format_class(v)} is not primitive with an integral dual (gcd {acc})")
    return CohomClass(coeffs, lattice)


def complement_basis(lattice, v, gamma):
    """Basis of the orthogonal complement of span{v, gamma}, v.v = 0 and v.gamma = 1"""
    gamma_sq = square(lattice, gamma)
    generators = []
    for i in range(lattice.rank):
        e = lattice.basis_class(i)
        b = pair(lattice, e, v)
        a = pair(lattice, e, gamma) - b * gamma_sq
        projected = e - a * v - b * gamma
        generators.append(tuple(int(c) for c in projected.coeffs))
    return tuple(CohomClass(vec, lattice) for vec in integral_basis(generators))


def block_inverse(lattice, block):
    return inverse_matrix([[pair(lattice, a, b) for b in block] for a in block])


def expand_summand_class(lattice, v, gamma, block, c, inverse=None):
    """
    (block coefficients, fiber coefficient, Gamma coefficient) of a summand class.

    ``inverse`` is the inverse Gram matrix of ``block`` when known; the block
    is orthogonal to v and gamma, so the block coefficients are then
    inverse . (c.b_1, ..., c.b_m).
    """
    g = pair(lattice, c, v)
    fiber_coef = pair(lattice, c, gamma) - g * square(lattice, gamma)
    if inverse is not None:
        pairings = [pair(lattice, c, b) for b in block]
        coords = [sum((m * p for m, p in zip(row, pairings)), Fraction(0)) for row in inverse]
        return coords, fiber_coef, g

    # Degenerate block: solve for the residual directly
    residual = c - fiber_coef * v - g * gamma
    coords = solve_coordinates([b.coeffs for b in block], residual.coeffs)
    if coords is None:
        raise UnexpandableClass(f"{format_class(c)} is not in the span of the summand basis")
    return coords, fiber_coef, g


def _side(spec, basis, side):
    if side == "x":
        return spec.x_model, spec.v_in_x, basis.gamma_x, basis.x_block, basis.x_inverse, basis.x_offset
    return spec.y_model, spec.v_in_y, basis.gamma_y, basis.y_block, basis.y_inverse, basis.y_offset


def push_summand_class(spec, basis, side, c):
    """Image in the sum of a class living on one summand"""
    model, v, gamma, block, inverse, offset = _side(spec, basis, side)
    _belongs(model.lattice, c, f"class on summand {side}")
    coords, fiber_coef, g = expand_summand_class(model.lattice, v, gamma, block, c, inverse)
    vector = [Fraction(0)] * basis.lattice.rank
    vector[0] = fiber_coef
    vector[1] = g
    for i, a in enumerate(coords):
        vector[offset + i] = a
    return CohomClass(vector, basis.lattice)


def _int_pair(lattice, a, b):
    value = pair(lattice, a, b)
    if value.denominator != 1:
        raise InvariantViolation("integrality", "glued Gram entry is not an integer")
    return int(value)


def _sum_b_one(spec, rank):
    # chi(X #_V Y) = chi(X) + chi(Y) - 2 chi(V), chi = 2 - 2 b1 + b2
    chi_x = 2 - 2 * spec.x_model.b_one + spec.x_model.lattice.rank
    chi_y = 2 - 2 * spec.y_model.b_one + spec.y_model.lattice.rank
    chi = chi_x + chi_y - 2 * (2 - 2 * spec.v_genus)
    twice = 2 + rank - chi
    if twice < 0 or twice % 2:
        raise InvariantViolation("b_one", f"Euler characteristic {chi} is inconsistent with b2 = {rank}")
    return twice // 2


def build_sum(spec, name=None):
    x, y = spec.x_model, spec.y_model

    # Summand pieces: V, its dual Gamma and the complement of both
    gamma_x = dual_class(x.lattice, spec.v_in_x)
    gamma_y = dual_class(y.lattice, spec.v_in_y)
    x_block = complement_basis(x.lattice, spec.v_in_x, gamma_x)
    y_block = complement_basis(y.lattice, spec.v_in_y, gamma_y)

    # Glued Gram matrix
    m, k, r = len(x_block), len(y_block), spec.rim_rank
    n = 2 + m + k + 2 * r
    gram = [[0] * n for _ in range(n)]
    gram[0][1] = gram[1][0] = 1
    gram[1][1] = _int_pair(x.lattice, gamma_x, gamma_x) + _int_pair(y.lattice, gamma_y, gamma_y)

    for offset, lattice, gamma, block in ((2, x.lattice, gamma_x, x_block), (2 + m, y.lattice, gamma_y, y_block)):
        for i, bi in enumerate(block):
            gram[offset + i][1] = gram[1][offset + i] = _int_pair(lattice, bi, gamma)
            for j, bj in enumerate(block):
                gram[offset + i][offset + j] = _int_pair(lattice, bi, bj)

    rim_offset = 2 + m + k
    for p in range(r):
        i = rim_offset + 2 * p
        gram[i][i + 1] = gram[i + 1][i] = 1

    # Labels and roles
    labels = ["F", "G"] + [f"x{i}" for i in range(1, m + 1)] + [f"y{i}" for i in range(1, k + 1)]
    for p in range(1, r + 1):
        labels += [f"r{p}", f"t{p}"]
    lattice = IntersectionLattice(tuple(tuple(row) for row in gram), tuple(labels))

    roles = [
        BasisRole(Role.F, "F", spec.v_in_x, spec.v_in_y),
        BasisRole(Role.GAMMA, "G", gamma_x, gamma_y),
    ]
    roles += [BasisRole(Role.X, f"x{i + 1}", maps_to_x=c) for i, c in enumerate(x_block)]
    roles += [BasisRole(Role.Y, f"y{i + 1}", maps_to_y=c) for i, c in enumerate(y_block)]
    for p in range(1, r + 1):
        roles += [BasisRole(Role.RIM, f"r{p}"), BasisRole(Role.TAU, f"t{p}")]
    basis = GluedBasis(
        lattice,
        tuple(roles),
        gamma_x,
        gamma_y,
        x_block,
        y_block,
        block_inverse(x.lattice, x_block),
        block_inverse(y.lattice, y_block),
    )

    # Pushed canonical and exceptional classes
    fiber = basis.fiber
    k_class = push_summand_class(spec, basis, "x", x.k_class) + push_summand_class(spec, basis, "y", y.k_class)
    k_class = k_class + 2 * fiber

    exceptional = [
        push_summand_class(spec, basis, side, e)
        for side, model, v in (("x", x, spec.v_in_x), ("y", y, spec.v_in_y))
        for e in model.exceptional
        if pair(model.lattice, e, v) == 0
    ]

    # Certification
    good = check_good(spec).good
    certified = (
        good
        and relative_cone_shape(x, spec.v_in_x) == RelativeShape.HALF_SPACE
        and relative_cone_shape(y, spec.v_in_y) == RelativeShape.HALF_SPACE
    )
    model = FourManifoldModel(
        name=name or f"{x.name}#{y.name}",
        lattice=lattice,
        k_class=k_class,
        exceptional=exceptional,
        b_plus=signature(lattice).b_plus,
        b_one=_sum_b_one(spec, n),
        minimal=x.minimal and y.minimal and spec.v_genus >= 1,
        fiber_class=fiber,
        half_space_certified=certified,
    )
    logger.info("Built %s: rank %d, good=%s, half-space certified=%s", model.name, n, good, certified)
    return model, basis


def _require_good(spec):
    report = check_good(spec)
    if not report.good:
        raise NotGood(report.reason)


def split_class(spec, basis, alpha, rho):
    """
    (alpha_X, alpha_Y) with alpha_X^2 = rho and alpha_X^2 + alpha_Y^2 = alpha^2.

    With alpha = sum a_i X_i + sum b_i Y_i + c F + g Gamma and
    B = sum a_i X_i + g Gamma^X, the fiber coefficient c^X solves
    B^2 + 2 g c^X = rho, and c^Y = c - c^X.
    """
    _require_good(spec)
    _belongs(basis.lattice, alpha, "alpha")
    rho = as_fraction(rho)
    lattice = basis.lattice

    # Split hypotheses
    g = pair(lattice, alpha, basis.fiber)
    if g <= 0:
        raise NonPositiveG(f"alpha.F = {g} must be positive")
    total = square(lattice, alpha)
    if total <= 0:
        raise NonPositiveSquare(f"square(alpha) = {total} must be positive")
    if not 0 < rho < total:
        raise RhoOutOfRange(f"rho = {rho} must lie strictly between 0 and {total}")

    c = alpha.coeffs[0]
    xs = alpha.coeffs[basis.x_offset:basis.x_offset + len(basis.x_block)]
    ys = alpha.coeffs[basis.y_offset:basis.y_offset + len(basis.y_block)]

    # X takes volume rho
    x_lattice = spec.x_model.lattice
    b = g * basis.gamma_x
    for a, xi in zip(xs, basis.x_block):
        b = b + a * xi
    c_x = (rho - square(x_lattice, b)) / (2 * g)
    alpha_x = b + c_x * spec.v_in_x

    # Y keeps the rest of the fiber coefficient
    alpha_y = g * basis.gamma_y + (c - c_x) * spec.v_in_y
    for a, yi in zip(ys, basis.y_block):
        alpha_y = alpha_y + a * yi
    return alpha_x, alpha_y


def push_sum_class(spec, basis, alpha_x, alpha_y):
    _belongs(spec.x_model.lattice, alpha_x, "alpha_x")
    _belongs(spec.y_model.lattice, alpha_y, "alpha_y")
    g_x = pair(spec.x_model.lattice, alpha_x, spec.v_in_x)
    g_y = pair(spec.y_model.lattice, alpha_y, spec.v_in_y)
    if g_x != g_y:
        raise MatchingFailure(f"alpha_x.V = {g_x} but alpha_y.V = {g_y}")

    xs, c_x, _ = expand_summand_class(
        spec.x_model.lattice, spec.v_in_x, basis.gamma_x, basis.x_block, alpha_x, basis.x_inverse
    )
    ys, c_y, _ = expand_summand_class(
        spec.y_model.lattice, spec.v_in_y, basis.gamma_y, basis.y_block, alpha_y, basis.y_inverse
    )
    vector = [c_x + c_y, g_x] + list(xs) + list(ys)
    vector += [Fraction(0)] * (basis.lattice.rank - len(vector))
    return CohomClass(vector, basis.lattice)


_POSITIVE = Inequality("square(alpha) > 0", "square", "> 0")


def sum_cone_contains(spec, basis, alpha):
    """
    Cone of sum forms of a good sum whose summands have half-space relative
    cones: {alpha in P : alpha.F > 0}. Members carry a split witness that is
    re-checked against both summand relative cones.
    """
    _require_good(spec)
    for side, model, v in (("X", spec.x_model, spec.v_in_x), ("Y", spec.y_model, spec.v_in_y)):
        shape = relative_cone_shape(model, v)
        if shape != RelativeShape.HALF_SPACE:
            raise HypothesisNotEstablished(
                f"relative cone of {side} = {model.name} along V has shape {shape.value}, not a half-space"
            )
    _belongs(basis.lattice, alpha, "alpha")
    lattice = basis.lattice

    details = []
    total = square(lattice, alpha)
    details.append((_POSITIVE.text, total))
    if total <= 0:
        return ConeVerdict(False, "sum", Scope.EXACT, ViolatedInequality(_POSITIVE, total), tuple(details))
    towards_f = Inequality("alpha.F > 0", "pair", "> 0", basis.fiber)
    g = pair(lattice, alpha, basis.fiber)
    details.append((towards_f.text, g))
    if g <= 0:
        return ConeVerdict(False, "sum", Scope.EXACT, ViolatedInequality(towards_f, g), tuple(details))

    rho = total / 2
    alpha_x, alpha_y = split_class(spec, basis, alpha, rho)
    for model, v, piece in ((spec.x_model, spec.v_in_x, alpha_x), (spec.y_model, spec.v_in_y, alpha_y)):
        if not relative_cone_contains(model, v, piece).member:
            raise WitnessRejected(f"{format_class(piece)} is not in the relative cone of {model.name}")
    return ConeVerdict(True, "sum", Scope.EXACT, SplitWitness(alpha_x, alpha_y, rho), tuple(details))


def iterate_sum_stages(specs):
    """
    Fold build_sum left to right; from the second stage on, the left operand
    is the previous output along its fiber class.
    """
    if not specs:
        raise InvariantViolation("specs", "an iterated sum needs at least one stage")
    stages = []
    previous = None
    for index, spec in enumerate(specs):
        if previous is not None:
            spec = replace(spec, x_model=previous, v_in_x=previous.fiber_class)
        report = check_good(spec)
        if not report.good:
            raise NotGood(f"stage {index}: {report.reason}")
        model, basis = build_sum(spec)
        stages.append(SumStage(index, spec, model, basis))
        previous = model
    return stages


def iterate_sum(specs):
    return iterate_sum_stages(specs)[-1].model
