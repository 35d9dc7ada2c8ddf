from dataclasses import replace
from fractions import Fraction

import pytest

import catalog
import fibersum
from errors import (
    HypothesisNotEstablished,
    InvariantViolation,
    MatchingFailure,
    NoDualClass,
    NonPositiveG,
    NonPositiveSquare,
    NotGood,
    NotSquareZero,
    RhoOutOfRange,
)
from fibersum import (
    FiberSumSpec,
    Role,
    block_inverse,
    build_sum,
    check_good,
    complement_basis,
    dual_class,
    expand_summand_class,
    iterate_sum,
    iterate_sum_stages,
    push_summand_class,
    push_sum_class,
    split_class,
    sum_cone_contains,
)
from lattice import IntersectionLattice, hyperbolic_plane, pair, parse_class, signature, square
from manifold_cones import SplitWitness, ViolatedInequality, relative_cone_contains, symplectic_cone_contains
from verify_suites import random_class, sample_rng


def e1e1_spec(e1, rim=2):
    f = e1.fiber_class
    return FiberSumSpec(e1, e1, f, f, rim_rank=rim, tau_rank=rim)


def test_t4_sum_is_t2_x_sigma2(t4t4):
    _, model, _ = t4t4
    assert model.lattice.rank == 10
    sig = signature(model.lattice)
    assert (sig.b_plus, sig.b_minus, sig.b_zero) == (5, 5, 0)
    assert model.k_class == 2 * model.fiber_class
    assert model.b_one == 6
    assert replace(model, name="T2xSigma(2)") == catalog.get_model("T2xSigma(2)")


def test_t4_sum_basis_roles(t4t4):
    _, _, basis = t4t4
    roles = [r.role for r in basis.roles]
    assert roles == [Role.F, Role.GAMMA] + [Role.X] * 4 + [Role.Y] * 4
    entry = basis.to_json()[1]
    assert entry["role"] == "Gamma"
    assert entry["label"] == "G"


def test_e1_sum_with_rim_tori(e1):
    spec = e1e1_spec(e1)
    model, basis = build_sum(spec)
    assert model.lattice.rank == 22
    sig = signature(model.lattice)
    assert (sig.b_plus, sig.b_minus, sig.b_zero) == (3, 19, 0)
    assert model.b_one == 0
    assert model.canonical_is_torsion
    assert not model.minimal
    assert not model.half_space_certified
    assert len(basis.x_block) == len(basis.y_block) == 8
    assert len(basis.indices(Role.RIM)) == len(basis.indices(Role.TAU)) == 2
    r1, t1 = basis.indices(Role.RIM)[0], basis.indices(Role.TAU)[0]
    assert model.lattice.gram[r1][t1] == 1
    assert model.lattice.gram[r1][r1] == 0
    assert not check_good(spec).good


def test_k3_summand_with_rim_tori_is_not_good(k3):
    spec = FiberSumSpec(k3, k3, k3.fiber_class, k3.fiber_class, rim_rank=2, tau_rank=2)
    assert not check_good(spec).good


def test_goodness_branches(t4, sigma2):
    assert check_good(FiberSumSpec(t4, sigma2, t4.fiber_class, sigma2.fiber_class, h1_injects_into_y=True)).good
    report = check_good(FiberSumSpec(t4, t4, t4.fiber_class, t4.fiber_class))
    assert report.good
    assert "supplied directly" in report.reason


def test_spec_needs_square_zero_classes(e1):
    e = parse_class(e1.lattice, "E1")
    with pytest.raises(NotSquareZero):
        FiberSumSpec(e1, e1, e, e1.fiber_class)


@pytest.mark.parametrize(
    "options, invariant",
    [
        ({"rim_rank": 2, "tau_rank": 1}, "rim_tau_rank"),
        ({"rim_rank": 2, "tau_rank": 2, "h1_injects_into_y": True}, "no_rim_tori"),
        ({"rim_rank": 4, "tau_rank": 4}, "rim_rank_bound"),
        ({"v_genus": -1}, "v_genus"),
    ],
)
def test_spec_invariants(t4, options, invariant):
    with pytest.raises(InvariantViolation) as info:
        FiberSumSpec(t4, t4, t4.fiber_class, t4.fiber_class, **options)
    assert info.value.invariant == invariant


def test_dual_class_takes_unit_pairing(t4):
    gamma = dual_class(t4.lattice, t4.fiber_class)
    assert gamma == parse_class(t4.lattice, "G")


def test_dual_class_extended_gcd():
    lattice = IntersectionLattice(((0, 2, 3), (2, 0, 0), (3, 0, 0)), ("v", "a", "b"))
    v = lattice.basis_class("v")
    gamma = dual_class(lattice, v)
    assert gamma.is_integral()
    assert pair(lattice, gamma, v) == 1


def test_dual_class_of_non_primitive_class():
    h = hyperbolic_plane(("f", "G"))
    with pytest.raises(NoDualClass):
        dual_class(h, parse_class(h, "2f"))


def test_complement_basis_on_e1(e1):
    f = e1.fiber_class
    gamma = dual_class(e1.lattice, f)
    block = complement_basis(e1.lattice, f, gamma)
    assert len(block) == 8
    for b in block:
        assert b.is_integral()
        assert pair(e1.lattice, b, f) == 0
        assert pair(e1.lattice, b, gamma) == 0


def test_split_volume_and_witness(t4t4, t4):
    spec, model, basis = t4t4
    alpha = parse_class(model.lattice, "2F+G")
    alpha_x, alpha_y = split_class(spec, basis, alpha, 2)
    assert alpha_x == parse_class(t4.lattice, "f+G")
    assert alpha_y == parse_class(t4.lattice, "f+G")
    assert square(t4.lattice, alpha_x) == square(t4.lattice, alpha_y) == 2


def test_split_with_complement_classes(t4t4, t4):
    spec, model, basis = t4t4
    alpha = parse_class(model.lattice, "3F+G+x1+x2")
    assert square(model.lattice, alpha) == 8
    alpha_x, alpha_y = split_class(spec, basis, alpha, Fraction(3))
    assert alpha_x.coefficient("f") == Fraction(1, 2)
    assert alpha_y.coefficient("f") == Fraction(5, 2)
    assert square(t4.lattice, alpha_x) == 3
    assert square(t4.lattice, alpha_y) == 5


@pytest.mark.parametrize(
    "text, rho, error",
    [
        ("G-F", 1, NonPositiveSquare),
        ("x1+x2", 1, NonPositiveG),
        ("2F-G", 1, NonPositiveG),
        ("2F+G", 4, RhoOutOfRange),
        ("2F+G", 0, RhoOutOfRange),
        ("2F+G", "5/1", RhoOutOfRange),
    ],
)
def test_split_errors(t4t4, text, rho, error):
    spec, model, basis = t4t4
    with pytest.raises(error):
        split_class(spec, basis, parse_class(model.lattice, text), rho)


def test_split_needs_good_sum(e1):
    spec = e1e1_spec(e1)
    model, basis = build_sum(spec)
    with pytest.raises(NotGood):
        split_class(spec, basis, parse_class(model.lattice, "2F+G"), 1)


def test_push_sum_class(t4t4, t4):
    spec, model, basis = t4t4
    fg = parse_class(t4.lattice, "f+G")
    g = parse_class(t4.lattice, "G")
    assert push_sum_class(spec, basis, fg, fg) == parse_class(model.lattice, "2F+G")
    assert push_sum_class(spec, basis, g, g) == parse_class(model.lattice, "G")
    with pytest.raises(MatchingFailure):
        push_sum_class(spec, basis, g, parse_class(t4.lattice, "2G"))


def test_split_then_push_returns_alpha(t4t4):
    spec, model, basis = t4t4
    alpha = parse_class(model.lattice, "5/2*F+3/2*G-x1+2x3+1/3*y4")
    rho = square(model.lattice, alpha) / 3
    assert push_sum_class(spec, basis, *split_class(spec, basis, alpha, rho)) == alpha


def test_push_summand_class_keeps_pairings(t4t4, t4):
    spec, model, basis = t4t4
    a = parse_class(t4.lattice, "f+2G-x3")
    b = parse_class(t4.lattice, "x4+3f")
    pushed_a = push_summand_class(spec, basis, "x", a)
    pushed_b = push_summand_class(spec, basis, "x", b)
    assert pair(model.lattice, pushed_a, pushed_b) == pair(t4.lattice, a, b)


def test_sum_cone(t4t4, t4):
    spec, model, basis = t4t4
    verdict = sum_cone_contains(spec, basis, parse_class(model.lattice, "2F+G"))
    assert verdict.member
    assert verdict.certificate == SplitWitness(
        parse_class(t4.lattice, "f+G"), parse_class(t4.lattice, "f+G"), Fraction(2)
    )

    verdict = sum_cone_contains(spec, basis, parse_class(model.lattice, "x1+x2"))
    assert not verdict.member
    assert isinstance(verdict.certificate, ViolatedInequality)
    assert verdict.certificate.lhs == 0


def test_sum_cone_witness_lies_in_both_relative_cones(t4t4):
    spec, model, basis = t4t4
    verdict = sum_cone_contains(spec, basis, parse_class(model.lattice, "7F+2G+x1-x2+y3"))
    assert verdict.member
    witness = verdict.certificate
    assert relative_cone_contains(spec.x_model, spec.v_in_x, witness.alpha_x).member
    assert relative_cone_contains(spec.y_model, spec.v_in_y, witness.alpha_y).member


def test_sum_cone_with_empty_relative_cone_summand(t4):
    type_d = catalog.get_model("TypeD")
    spec = FiberSumSpec(t4, type_d, t4.fiber_class, type_d.fiber_class)
    _, basis = build_sum(spec)
    with pytest.raises(HypothesisNotEstablished):
        sum_cone_contains(spec, basis, basis.gamma + 2 * basis.fiber)


def test_iterate_three_t4_gives_t2_x_sigma3(t4t4_spec):
    model = iterate_sum([t4t4_spec, t4t4_spec])
    assert model.lattice.rank == 14
    assert model.k_class == 4 * model.fiber_class
    assert replace(model, name="T2xSigma(3)") == catalog.get_model("T2xSigma(3)")


def test_iterate_single_stage_is_build_sum(t4t4_spec, t4t4):
    _, model, _ = t4t4
    assert iterate_sum([t4t4_spec]) == model


def test_iterate_stops_at_non_good_stage(t4, t4t4_spec):
    bad = FiberSumSpec(t4, t4, t4.fiber_class, t4.fiber_class, rim_rank=2, tau_rank=2)
    with pytest.raises(NotGood, match="stage 1"):
        iterate_sum_stages([t4t4_spec, bad])


def test_iterate_needs_a_stage():
    with pytest.raises(InvariantViolation):
        iterate_sum_stages([])


def test_block_inverse_matches_exact_solve(t4t4, t4):
    spec, _, basis = t4t4
    assert basis.x_inverse is not None
    for index in range(40):
        c = random_class(sample_rng(5, index), t4.lattice)
        args = (t4.lattice, spec.v_in_x, basis.gamma_x, basis.x_block, c)
        assert expand_summand_class(*args, basis.x_inverse) == expand_summand_class(*args)


def test_degenerate_block_falls_back_to_solve():
    lattice = IntersectionLattice(((0, 1, 0), (1, 0, 0), (0, 0, 0)), ("v", "g", "n"))
    v, gamma = lattice.basis_class("v"), lattice.basis_class("g")
    block = complement_basis(lattice, v, gamma)
    assert block_inverse(lattice, block) is None
    coords, fiber_coef, g = expand_summand_class(lattice, v, gamma, block, parse_class(lattice, "2v+3g-n"))
    assert (coords, fiber_coef, g) == ([Fraction(-1)], Fraction(2), Fraction(3))


def test_push_sum_class_uses_block_inverse(t4t4, mocker):
    spec, model, basis = t4t4
    spy = mocker.spy(fibersum, "solve_coordinates")
    alpha = parse_class(model.lattice, "7/2*F+2G-x1+x4+1/3*y2")
    assert push_sum_class(spec, basis, *split_class(spec, basis, alpha, 5)) == alpha
    assert spy.call_count == 0


def test_enriques_sum_with_t2_x_sigma2(enriques, sigma2):
    assert enriques.b_plus == 1
    assert enriques.canonical_is_torsion
    spec = FiberSumSpec(enriques, sigma2, enriques.fiber_class, sigma2.fiber_class, h1_injects_into_y=True)
    model, basis = build_sum(spec)
    assert model.name == "Enriques#T2xSigma(2)"
    assert model.lattice.rank == 18
    assert model.b_plus == 5
    assert model.k_class == 4 * model.fiber_class
    assert model.b_one == 4
    assert model.minimal
    assert model.half_space_certified

    for text, member in [("3F+G", True), ("-3F-G", True), ("x1+x2", False)]:
        verdict = symplectic_cone_contains(model, parse_class(model.lattice, text))
        assert verdict.predicate == "symplectic:canonical-union"
        assert verdict.member is member

    alpha = parse_class(model.lattice, "3F+G")
    verdict = sum_cone_contains(spec, basis, alpha)
    assert verdict.member
    assert verdict.certificate.alpha_x == parse_class(enriques.lattice, "3/2*f+G")
    assert relative_cone_contains(enriques, enriques.fiber_class, verdict.certificate.alpha_x).member
