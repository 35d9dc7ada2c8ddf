import json

import pandas as pd
import pytest
import sympy

import fibersum
from errors import UsageError
from verify_suites import (
    SUITES,
    random_class,
    random_splittable_class,
    random_unimodular,
    report_frame,
    run_suite,
    sample_rng,
    write_csv,
)
from lattice import square


def test_generator_is_keyed_by_seed_and_index():
    a = sample_rng(7, 3).integers(0, 1 << 30, size=4).tolist()
    b = sample_rng(7, 3).integers(0, 1 << 30, size=4).tolist()
    c = sample_rng(7, 4).integers(0, 1 << 30, size=4).tolist()
    assert a == b
    assert a != c


@pytest.mark.parametrize("n", [1, 2, 5, 10])
def test_random_unimodular_has_unit_determinant(n):
    u = random_unimodular(sample_rng(0, n), n)
    assert abs(sympy.Matrix(u).det()) == 1


def test_random_splittable_class(t4t4):
    _, model, basis = t4t4
    for index in range(25):
        alpha = random_splittable_class(sample_rng(11, index), basis)
        assert square(model.lattice, alpha) > 0
        assert alpha.coefficient("G") > 0


def test_random_class_lives_on_lattice(k3):
    c = random_class(sample_rng(0, 0), k3.lattice)
    assert c.lattice == k3.lattice


def test_table_suite_checks_five_rows():
    report = run_suite("table", 1, 0)
    assert report.passed
    assert [c.name for c in report.checks] == [
        "row:T4", "row:PrimaryKodaira", "row:Hyperelliptic", "row:TypeD", "row:TypeEH",
    ]


def test_t2_suite():
    report = run_suite("t2", 40, 7)
    assert report.passed
    volume = next(c for c in report.checks if c.name == "T4#T4:volume")
    assert volume.passed == 40
    assert volume.first_counterexample is None


def test_snt4_suite_sees_members_and_non_members():
    report = run_suite("snt4", 30, 1)
    assert report.passed
    agreement = [c for c in report.checks if c.name.endswith(":agreement")]
    assert [c.name for c in agreement] == ["k=2:agreement", "k=3:agreement", "k=4:agreement", "k=5:agreement"]
    for check in agreement:
        assert check.passed == 30
    totals = {key: sum(c.stats.get(key, 0) for c in agreement) for key in ("members", "non_members")}
    assert totals["members"] > 0
    assert totals["non_members"] > 0


def test_b1_suite():
    assert run_suite("b1", 60, 2).passed


def test_b1_suite_at_full_size():
    report = run_suite("b1", 1000, 0)
    assert report.passed
    agreement = report.checks[0]
    assert agreement.stats["members"] > 0
    assert agreement.stats["non_members"] > 0


def test_t2_suite_expands_through_block_inverses(mocker):
    spy = mocker.spy(fibersum, "solve_coordinates")
    assert run_suite("t2", 25, 3).passed
    assert spy.call_count == 0


def test_lattice_suite():
    report = run_suite("lattice", 40, 5)
    assert report.passed
    assert report.checks[0].name == "k3_signature"


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_reports_are_reproducible(suite):
    first = json.dumps(run_suite(suite, 15, 9).to_json())
    assert json.dumps(run_suite(suite, 15, 9).to_json()) == first


def test_run_suite_rejects_bad_arguments():
    with pytest.raises(UsageError):
        run_suite("nope")
    with pytest.raises(UsageError):
        run_suite("table", 0)
    with pytest.raises(UsageError):
        run_suite("table", 1, -1)
    assert set(SUITES) == {"table", "t2", "snt4", "b1", "lattice"}


def test_report_csv(tmp_path):
    report = run_suite("table", 1, 0)
    frame = report_frame(report)
    assert list(frame.columns) == ["suite", "check", "passed", "failed"]
    path = tmp_path / "table.csv"
    write_csv(report, path)
    loaded = pd.read_csv(path)
    assert loaded["failed"].sum() == 0
    assert len(loaded) == 5
