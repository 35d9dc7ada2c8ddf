import json
import os

import pytest

import catalog
from errors import InvariantViolation, SchemaError, UnknownModel
from fibersum import FiberSumSpec, build_sum
from lattice import signature, square
from manifold_cones import ConeTableTag, RelativeShape, relative_cone_shape


def test_t4(t4):
    assert t4.b_plus == 3
    assert t4.b_one == 4
    assert t4.lattice.labels == ("f", "G", "x1", "x2", "x3", "x4")
    assert t4.canonical_is_torsion
    assert t4.cone_table_tag == ConeTableTag.T4


def test_k3(k3):
    assert k3.lattice.rank == 22
    sig = signature(k3.lattice)
    assert (sig.b_plus, sig.b_minus) == (3, 19)
    assert k3.minimal


def test_type_d_relative_cone_is_empty():
    type_d = catalog.get_model("TypeD")
    assert relative_cone_shape(type_d, type_d.fiber_class) == RelativeShape.EMPTY


@pytest.mark.parametrize(
    "name, rank, b_one",
    [("T4", 6, 4), ("PrimaryKodaira", 4, 3), ("Hyperelliptic", 2, 2), ("TypeD", 2, 2), ("TypeEH", 2, 2)],
)
def test_torus_bundles_have_zero_euler_characteristic(name, rank, b_one):
    model = catalog.get_model(name)
    assert model.lattice.rank == rank
    assert model.b_one == b_one
    assert 2 - 2 * model.b_one + model.lattice.rank == 0
    assert signature(model.lattice).index == 0


def test_e1(e1):
    assert e1.b_plus == 1
    assert not e1.minimal
    assert len(e1.exceptional) == 171
    assert square(e1.lattice, e1.fiber_class) == 0
    assert e1.k_class == -e1.fiber_class
    assert all(square(e1.lattice, e) == -1 for e in e1.exceptional)


@pytest.mark.parametrize("genus", [2, 3, 5])
def test_t2_x_sigma(genus):
    model = catalog.get_model(f"T2xSigma({genus})")
    assert model.lattice.rank == 2 + 4 * genus
    assert model.b_plus == 1 + 2 * genus
    assert model.k_class == (2 * genus - 2) * model.fiber_class
    assert model.half_space_certified
    assert model.lattice.labels[-4:] == ("y1", "y2", "y3", "y4")


@pytest.mark.parametrize("name", ["T2xSigma(1)", "T2xSigma(0)", "CP2", "t4"])
def test_unknown_models(name, no_catalog_env):
    with pytest.raises(UnknownModel):
        catalog.get_model(name)


def test_entries_carry_provenance_notes():
    assert "171" in catalog.get_entry("E1").provenance_notes


def test_list_models(no_catalog_env):
    names = catalog.list_models()
    assert names[:7] == ["T4", "PrimaryKodaira", "Hyperelliptic", "TypeD", "TypeEH", "E1", "K3"]
    assert "T2xSigma(g)" in names


@pytest.mark.parametrize(
    "name",
    ["T4", "PrimaryKodaira", "Hyperelliptic", "TypeD", "TypeEH", "E1", "K3", "T2xSigma(2)", "T2xSigma(4)"],
)
def test_load_model_round_trip(name, no_catalog_env):
    model = catalog.get_model(name)
    assert catalog.load_model(json.dumps(catalog.serialize_model(model))) == model


def test_built_sums_round_trip(t4t4, e1):
    _, t4_sum, _ = t4t4
    e1_sum, _ = build_sum(FiberSumSpec(e1, e1, e1.fiber_class, e1.fiber_class, rim_rank=2, tau_rank=2))
    for model in (t4_sum, e1_sum):
        assert catalog.load_model(json.dumps(catalog.serialize_model(model))) == model


def test_load_model_accepts_class_literals(t4):
    data = t4.to_json()
    data["fiber_class"] = "f"
    data["k_class"] = "0"
    assert catalog.load_model(data) == t4


def test_load_model_asymmetric_gram(t4):
    data = t4.to_json()
    data["lattice"]["gram"][0][2] = 1
    with pytest.raises(InvariantViolation) as info:
        catalog.load_model(data)
    assert info.value.invariant == "symmetry"


def test_load_model_wrong_b_plus(t4):
    data = t4.to_json()
    data["b_plus"] = 2
    with pytest.raises(InvariantViolation) as info:
        catalog.load_model(data)
    assert info.value.invariant == "b_plus"


@pytest.mark.parametrize(
    "edit",
    [
        lambda d: d.pop("b_one"),
        lambda d: d.pop("k_class"),
        lambda d: d.update(minimal="yes"),
        lambda d: d.update(cone_table_tag="TypeZ"),
        lambda d: d.update(k_class=[[0, 1]]),
        lambda d: d.update(k_class=[[0, 2]] * 6),
    ],
)
def test_load_model_schema_errors(t4, edit):
    data = t4.to_json()
    edit(data)
    with pytest.raises(SchemaError):
        catalog.load_model(data)


def test_load_model_rejects_bad_json():
    with pytest.raises(SchemaError):
        catalog.load_model("{not json")


def test_override_directory_from_environment(tmp_path, mocker):
    hyper = catalog.get_model("Hyperelliptic")
    (tmp_path / "T4.json").write_text(json.dumps(hyper.to_json()), encoding="utf-8")
    custom = dict(hyper.to_json(), name="MyTorus")
    (tmp_path / "MyTorus.json").write_text(json.dumps(custom), encoding="utf-8")
    mocker.patch.dict(os.environ, {catalog.CATALOG_ENV: str(tmp_path)})

    assert catalog.get_model("T4").lattice.rank == 2
    assert catalog.get_model("MyTorus").name == "MyTorus"
    assert "MyTorus" in catalog.list_models()
    assert "override" in catalog.get_entry("T4").provenance_notes


def test_explicit_directory_wins_over_environment(tmp_path, mocker):
    mocker.patch.dict(os.environ, {catalog.CATALOG_ENV: str(tmp_path / "missing")})
    hyper = catalog.get_model("Hyperelliptic")
    (tmp_path / "K3.json").write_text(json.dumps(hyper.to_json()), encoding="utf-8")
    assert catalog.get_model("K3", tmp_path).lattice.rank == 2
    assert catalog.get_model("K3").lattice.rank == 22


def test_resolve_model(tmp_path, t4):
    path = tmp_path / "mine.json"
    path.write_text(json.dumps(t4.to_json()), encoding="utf-8")
    assert catalog.resolve_model(str(path)) == t4
    assert catalog.resolve_model(t4.to_json()) == t4
    assert catalog.resolve_model("T4") == t4
    with pytest.raises(SchemaError):
        catalog.resolve_model(str(tmp_path / "absent.json"))
    with pytest.raises(SchemaError):
        catalog.resolve_model(42)
