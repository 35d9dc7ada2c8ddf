"""
Seeded verification suites behind ``conekit.py verify``.

Every sample draws from its own generator, numpy's PCG64 seeded with
SeedSequence([seed, *sample_key]), so a report depends only on the seed and
the sample count, never on evaluation order.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
import pandas as pd

import catalog
from errors import UsageError
from fibersum import FiberSumSpec, build_sum, iterate_sum_stages, push_sum_class, split_class, sum_cone_contains
from lattice import (
    CohomClass,
    IntersectionLattice,
    change_basis,
    format_class,
    parse_class,
    pair,
    signature,
    square,
    sylvester_signature,
)
from manifold_cones import (
    ConeTableTag,
    TableRow,
    conjecture_cone_contains,
    half_cone_contains,
    recheck_certificate,
    relative_cone_contains,
    symplectic_cone_b1_contains,
    table_cone_contains,
)

logger = logging.getLogger(__name__)


def sample_rng(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *key])))


def random_rational(rng, bound=6, max_den=4):
    return Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, max_den + 1)))


def random_class(rng, lattice, bound=6, max_den=4):
    return CohomClass([random_rational(rng, bound, max_den) for _ in range(lattice.rank)], lattice)


def random_unimodular(rng, n, steps=None):
    """Product of elementary integer column operations"""
    u = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(steps or 2 * n):
        op = int(rng.integers(0, 3)) if n > 1 else 2
        if op == 0:
            i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
            k = int(rng.integers(-2, 3))
            for row in u:
                row[i] += k * row[j]
        elif op == 1:
            i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
            for row in u:
                row[i], row[j] = row[j], row[i]
        else:
            i = int(rng.integers(0, n))
            for row in u:
                row[i] = -row[i]
    return u


def random_lattice(rng, max_rank=10, bound=3):
    n = int(rng.integers(1, max_rank + 1))
    gram = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            gram[i][j] = gram[j][i] = int(rng.integers(-bound, bound + 1))
    return IntersectionLattice(tuple(tuple(row) for row in gram), tuple(f"e{i + 1}" for i in range(n)))


@dataclass
class CheckTally:
    name: str
    passed: int = 0
    failed: int = 0
    first_counterexample: Optional[dict] = None
    stats: dict = field(default_factory=dict)

    def record(self, ok, counterexample):
        if ok:
            self.passed += 1
            return
        self.failed += 1
        if self.first_counterexample is None:
            self.first_counterexample = counterexample()

    def count(self, key):
        self.stats[key] = self.stats.get(key, 0) + 1

    def to_json(self):
        data = {"name": self.name, "passed": self.passed, "failed": self.failed}
        if self.stats:
            data["stats"] = dict(sorted(self.stats.items()))
        data["first_counterexample"] = self.first_counterexample
        return data


@dataclass
class SuiteReport:
    suite: str
    samples: int
    seed: int
    checks: list

    @property
    def passed(self):
        return all(check.failed == 0 for check in self.checks)

    def to_json(self):
        return {
            "suite": self.suite,
            "samples": self.samples,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [check.to_json() for check in self.checks],
        }


# The T^2-bundle table as printed: type -> (b1, symplectic cone, relative cone of the fiber)
_TABLE = {
    "T4": (4, "P", "P^F"),
    "PrimaryKodaira": (3, "P", "P^F"),
    "Hyperelliptic": (2, "P", "P"),
    "TypeD": (2, "P", "empty"),
    "TypeEH": (2, "P", "P"),
}

_TABLE_CLASSES = ["f+G", "-f-G", "f", "f-G", "2f+G", "G", "f+2G", "3/2*f+1/2*G", "-f+G"]
_WIDE_CLASSES = ["x1+x2", "f+G+x1", "f+G-x1-x2", "2f+G+x1-x2"]


def _expected_relative(cone, sq, towards_f):
    if cone == "empty":
        return False
    if cone == "P":
        return sq > 0
    return sq > 0 and towards_f > 0


def table_suite(samples, seed):
    """Fixed battery of classes against each row of the table; samples and seed are unused"""
    checks = []
    for name, (b_one, absolute, relative) in _TABLE.items():
        model = catalog.get_model(name)
        tally = CheckTally(f"row:{name}")
        lattice = model.lattice
        battery = _TABLE_CLASSES + (_WIDE_CLASSES if "x2" in lattice.labels else [])

        tally.record(model.b_one == b_one, lambda: {"field": "b_one", "got": model.b_one, "expected": b_one})
        tally.record(
            model.cone_table_tag == ConeTableTag(name),
            lambda: {"field": "cone_table_tag", "got": str(model.cone_table_tag)},
        )
        for text in battery:
            alpha = parse_class(lattice, text)
            sq = square(lattice, alpha)
            towards_f = pair(lattice, alpha, model.fiber_class)

            verdict = relative_cone_contains(model, model.fiber_class, alpha)
            ok = verdict.member == _expected_relative(relative, sq, towards_f)
            if relative == "empty":
                ok = ok and isinstance(verdict.certificate, TableRow) and verdict.certificate.cone == "empty"
            tally.record(ok, lambda: {"class": text, "column": "relative", "member": verdict.member})

            absolute_verdict = table_cone_contains(model, alpha)
            expected_absolute = sq > 0 if absolute == "P" else False
            tally.record(
                absolute_verdict.member == expected_absolute,
                lambda: {"class": text, "column": "symplectic", "member": absolute_verdict.member},
            )
        checks.append(tally)
    return checks


def _t2_specs():
    t4 = catalog.get_model("T4")
    sigma2 = catalog.get_model("T2xSigma(2)")
    return [
        ("T4#T4", FiberSumSpec(t4, t4, t4.fiber_class, t4.fiber_class, h1_injects_into_y=True)),
        ("T2xSigma(2)#T4", FiberSumSpec(sigma2, t4, sigma2.fiber_class, t4.fiber_class, h1_injects_into_y=True)),
    ]


def random_splittable_class(rng, basis):
    """Random alpha on a good sum with alpha.F > 0 and alpha^2 > 0"""
    lattice = basis.lattice
    coeffs = [random_rational(rng) for _ in range(lattice.rank)]
    g = Fraction(int(rng.integers(1, 7)), int(rng.integers(1, 5)))
    coeffs[1] = g
    alpha = CohomClass(coeffs, lattice)
    total = square(lattice, alpha)
    if total <= 0:
        # alpha^2 is affine in the F coefficient with slope 2g
        shift = (1 - total) / (2 * g) + abs(random_rational(rng))
        alpha = alpha + shift * basis.fiber
    return alpha


def random_rho(rng, total):
    m = int(rng.integers(2, 10))
    return total * Fraction(int(rng.integers(1, m)), m)


def t2_suite(samples, seed):
    checks = []
    for spec_index, (name, spec) in enumerate(_t2_specs()):
        _, basis = build_sum(spec)
        volume = CheckTally(f"{name}:volume")
        round_trip = CheckTally(f"{name}:round_trip")
        witness_x = CheckTally(f"{name}:witness_x")
        witness_y = CheckTally(f"{name}:witness_y")

        for index in range(samples):
            rng = sample_rng(seed, spec_index, index)
            alpha = random_splittable_class(rng, basis)
            total = square(basis.lattice, alpha)
            rho = random_rho(rng, total)
            alpha_x, alpha_y = split_class(spec, basis, alpha, rho)

            def witness():
                return {"sample": index, "alpha": format_class(alpha), "rho": str(rho)}

            sq_x = square(spec.x_model.lattice, alpha_x)
            sq_y = square(spec.y_model.lattice, alpha_y)
            volume.record(sq_x == rho and sq_x + sq_y == total, witness)
            round_trip.record(push_sum_class(spec, basis, alpha_x, alpha_y) == alpha, witness)
            witness_x.record(relative_cone_contains(spec.x_model, spec.v_in_x, alpha_x).member, witness)
            witness_y.record(relative_cone_contains(spec.y_model, spec.v_in_y, alpha_y).member, witness)
        logger.info("t2 suite: %s done", name)
        checks += [volume, round_trip, witness_x, witness_y]
    return checks


def t4_tower_specs(stages):
    t4 = catalog.get_model("T4")
    spec = FiberSumSpec(t4, t4, t4.fiber_class, t4.fiber_class, h1_injects_into_y=True)
    return [spec] * stages


def snt4_suite(samples, seed, genera=(2, 3, 4, 5)):
    checks = []
    stages = iterate_sum_stages(t4_tower_specs(max(genera) - 1))
    for genus in genera:
        stage = stages[genus - 2]
        model, basis = stage.model, stage.basis
        fiber = model.fiber_class

        canonical = CheckTally(f"k={genus}:canonical_class")
        canonical.record(
            model.k_class == (2 * genus - 2) * fiber,
            lambda: {"k_class": format_class(model.k_class)},
        )
        agreement = CheckTally(f"k={genus}:agreement")
        for index in range(samples):
            rng = sample_rng(seed, genus, index)
            alpha = random_class(rng, model.lattice, bound=3, max_den=3)
            if pair(model.lattice, alpha, fiber) < 0:
                alpha = -alpha

            by_sum = sum_cone_contains(stage.spec, basis, alpha).member
            by_half_space = half_cone_contains(model, fiber, alpha).member
            by_conjecture = conjecture_cone_contains(model, alpha).member
            agreement.count("members" if by_sum else "non_members")
            agreement.record(
                by_sum == by_half_space == by_conjecture,
                lambda: {
                    "sample": index,
                    "alpha": format_class(alpha),
                    "sum": by_sum,
                    "half_space": by_half_space,
                    "conjecture": by_conjecture,
                },
            )
        logger.info("snt4 suite: genus %d done", genus)
        checks += [canonical, agreement]
    return checks


def random_e1_class(rng, lattice):
    coeffs = [Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 3)))]
    coeffs += [random_rational(rng, bound=3, max_den=2) for _ in range(lattice.rank - 1)]
    if rng.integers(0, 4) == 0:
        coeffs[0] = -coeffs[0]
    return CohomClass(coeffs, lattice)


def b1_suite(samples, seed):
    model = catalog.get_model("E1")
    fiber = model.fiber_class
    agreement = CheckTally("b1_relative_agreement")
    certificates = CheckTally("certificates")
    for index in range(samples):
        rng = sample_rng(seed, index)
        alpha = random_e1_class(rng, model.lattice)
        absolute = symplectic_cone_b1_contains(model, alpha)
        relative = relative_cone_contains(model, fiber, alpha)
        towards_f = pair(model.lattice, alpha, fiber) > 0
        agreement.count("members" if relative.member else "non_members")

        def witness():
            return {"sample": index, "alpha": format_class(alpha)}

        agreement.record((absolute.member and towards_f) == relative.member, witness)
        for verdict in (absolute, relative):
            if not verdict.member:
                certificates.record(recheck_certificate(model, alpha, verdict), witness)
    return [agreement, certificates]


def lattice_suite(samples, seed):
    k3 = catalog.get_model("K3").lattice
    k3_signature = CheckTally("k3_signature")
    sig = signature(k3)
    k3_signature.record(
        (sig.b_plus, sig.b_minus, sig.b_zero) == (3, 19, 0),
        lambda: {"signature": sig.to_json()},
    )

    invariance = CheckTally("unimodular_invariance")
    symmetry = CheckTally("symmetry")
    bilinearity = CheckTally("bilinearity")
    sylvester = CheckTally("sylvester")
    for index in range(samples):
        rng = sample_rng(seed, index)
        lattice = random_lattice(rng)
        u = random_unimodular(rng, lattice.rank)
        moved = change_basis(lattice, u)
        invariance.record(
            signature(moved) == signature(lattice),
            lambda: {"sample": index, "gram": [list(r) for r in lattice.gram], "u": u},
        )

        a, b, c = (random_class(rng, lattice) for _ in range(3))
        lam = random_rational(rng)
        symmetry.record(pair(lattice, a, b) == pair(lattice, b, a), lambda: {"sample": index})
        bilinearity.record(
            pair(lattice, a + lam * b, c) == pair(lattice, a, c) + lam * pair(lattice, b, c),
            lambda: {"sample": index},
        )
        index_value = sylvester_signature(lattice)
        if index_value is not None:
            sylvester.record(index_value == signature(lattice).index, lambda: {"sample": index})
    return [k3_signature, invariance, symmetry, bilinearity, sylvester]


SUITES = {
    "table": table_suite,
    "t2": t2_suite,
    "snt4": snt4_suite,
    "b1": b1_suite,
    "lattice": lattice_suite,
}


def run_suite(name, samples=1000, seed=0):
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if samples < 1:
        raise UsageError("samples must be at least 1")
    if seed < 0:
        raise UsageError("seed must be nonnegative")
    logger.info("Running suite %s with %d samples, seed %d", name, samples, seed)
    return SuiteReport(name, samples, seed, SUITES[name](samples, seed))


def report_frame(report):
    rows = [
        {"suite": report.suite, "check": c.name, "passed": c.passed, "failed": c.failed}
        for c in report.checks
    ]
    return pd.DataFrame(rows, columns=["suite", "check", "passed", "failed"])


def write_csv(report, path):
    frame = report_frame(report)
    frame.to_csv(path, index=False)
    logger.info("Wrote %s with %d checks", path, len(frame))
