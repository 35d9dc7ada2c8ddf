"""
Built-in 4-manifold models and ingestion of user models.

The built-ins are pinned by the T^2-bundle table and the worked fiber-sum
examples. A directory of ``<name>.json`` files (``--catalog-dir`` or the
CONEKIT_CATALOG environment variable) overrides built-ins of the same name.
"""

import json
import logging
import os
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from pathlib import Path

from errors import MismatchedLattice, SchemaError, UnknownModel
from lattice import CohomClass, IntersectionLattice, direct_sum, hyperbolic_plane, negative_e8, parse_class
from manifold_cones import ConeTableTag, FourManifoldModel

logger = logging.getLogger(__name__)

CATALOG_ENV = "CONEKIT_CATALOG"

_SIGMA_NAME = re.compile(r"^T2xSigma\((\d+)\)$")


@dataclass(frozen=True)
class CatalogEntry:
    model: FourManifoldModel
    provenance_notes: str


def hyperbolic_sum(labels):
    """Orthogonal sum of hyperbolic planes on consecutive label pairs"""
    planes = [hyperbolic_plane((labels[i], labels[i + 1])) for i in range(0, len(labels), 2)]
    return direct_sum(*planes)


def _torus_bundle(name, b_one, tag, notes):
    # chi = 0 and sigma = 0 force b2 = 2*b1 - 2, a sum of hyperbolic planes
    rank = 2 * b_one - 2
    lattice = hyperbolic_sum(["f", "G"] + [f"x{i}" for i in range(1, rank - 1)])
    model = FourManifoldModel(
        name=name,
        lattice=lattice,
        k_class=lattice.zero(),
        b_plus=rank // 2,
        b_one=b_one,
        minimal=True,
        fiber_class=lattice.basis_class("f"),
        cone_table_tag=tag,
    )
    return CatalogEntry(model, notes)


def _t4():
    return _torus_bundle(
        "T4", 4, ConeTableTag.T4,
        "form 3H with all pairings +1 (basis orientations absorbed); K = 0; fiber f; "
        "symplectic cone P and relative cone P^F from the T^2-bundle table",
    )


def _primary_kodaira():
    return _torus_bundle(
        "PrimaryKodaira", 3, ConeTableTag.PRIMARY_KODAIRA,
        "b1 = 3 from the table, rank 4 from chi = sigma = 0; K torsion; relative cone P^F from the table",
    )


def _hyperelliptic():
    return _torus_bundle(
        "Hyperelliptic", 2, ConeTableTag.HYPERELLIPTIC,
        "b1 = 2 from the table, rank 2 from chi = sigma = 0; K torsion; relative cone P from the table",
    )


def _type_d():
    return _torus_bundle(
        "TypeD", 2, ConeTableTag.TYPE_D,
        "b1 = 2 from the table; relative cone of the fiber is empty (table row (d))",
    )


def _type_eh():
    return _torus_bundle(
        "TypeEH", 2, ConeTableTag.TYPE_EH,
        "rows (e)-(h) share b1 = 2 and cone data; modelled as one tag",
    )


def t2_x_sigma(genus):
    """T^2 x Sigma_g, labelled the way folding T^4 sums along the fiber labels it"""
    if genus < 2:
        raise UnknownModel(f"T2xSigma(g) needs g >= 2, got {genus}")
    labels = ["F", "G"] + [f"x{i}" for i in range(1, 4 * (genus - 1) + 1)] + [f"y{i}" for i in range(1, 5)]
    lattice = hyperbolic_sum(labels)
    fiber = lattice.basis_class("F")
    model = FourManifoldModel(
        name=f"T2xSigma({genus})",
        lattice=lattice,
        k_class=(2 * genus - 2) * fiber,
        b_plus=1 + 2 * genus,
        b_one=2 + 2 * genus,
        minimal=True,
        fiber_class=fiber,
        half_space_certified=True,
    )
    notes = (
        f"b2 = 2 + 4g = {lattice.rank} (Kunneth); K = (2g-2)F since the canonical class of a minimal "
        "T^2-fibration is proportional to the fiber; relative cone of the fiber is the half-space P^F"
    )
    return CatalogEntry(model, notes)


def e1_exceptional_classes(lattice):
    """E_i, H - E_i - E_j and 2H minus five E_i: a finite slice of the exceptional set"""
    h = lattice.basis_class("H")
    es = [lattice.basis_class(f"E{i}") for i in range(1, 10)]
    classes = list(es)
    classes += [h - es[i] - es[j] for i, j in combinations(range(9), 2)]
    for five in combinations(range(9), 5):
        c = 2 * h
        for i in five:
            c = c - es[i]
        classes.append(c)
    return classes


def _e1():
    labels = ["H"] + [f"E{i}" for i in range(1, 10)]
    gram = tuple(tuple((1 if i == 0 else -1) if i == j else 0 for j in range(10)) for i in range(10))
    lattice = IntersectionLattice(gram, tuple(labels))
    fiber = parse_class(lattice, "3H-E1-E2-E3-E4-E5-E6-E7-E8-E9")
    model = FourManifoldModel(
        name="E1",
        lattice=lattice,
        k_class=-fiber,
        exceptional=e1_exceptional_classes(lattice),
        b_plus=1,
        b_one=0,
        minimal=False,
        fiber_class=fiber,
    )
    notes = (
        "CP^2 # 9(-CP^2): form <1> + 9<-1>, K = -3H + sum E_i = -F, fiber F = 3H - sum E_i; "
        "stored exceptional list truncated to E_i, H-E_i-E_j, 2H-(five E_i) (171 classes)"
    )
    return CatalogEntry(model, notes)


def _k3():
    lattice = direct_sum(
        hyperbolic_plane(("f", "G")),
        hyperbolic_plane(("a1", "b1")),
        hyperbolic_plane(("a2", "b2")),
        negative_e8("p"),
        negative_e8("q"),
    )
    model = FourManifoldModel(
        name="K3",
        lattice=lattice,
        k_class=lattice.zero(),
        b_plus=3,
        b_one=0,
        minimal=True,
        fiber_class=lattice.basis_class("f"),
    )
    notes = "form 3H + 2(-E8), rank 22; K = 0; fiber class f, an isotropic primitive vector of the first H"
    return CatalogEntry(model, notes)


_BUILTINS = {
    "T4": _t4,
    "PrimaryKodaira": _primary_kodaira,
    "Hyperelliptic": _hyperelliptic,
    "TypeD": _type_d,
    "TypeEH": _type_eh,
    "E1": _e1,
    "K3": _k3,
}


@lru_cache(maxsize=None)
def _builtin_entry(name):
    if name in _BUILTINS:
        return _BUILTINS[name]()
    match = _SIGMA_NAME.match(name)
    if match:
        return t2_x_sigma(int(match.group(1)))
    raise UnknownModel(f"no catalog model named {name!r}")


def catalog_dir_from_env(catalog_dir=None):
    value = catalog_dir or os.environ.get(CATALOG_ENV)
    return Path(value) if value else None


def get_entry(name, catalog_dir=None):
    directory = catalog_dir_from_env(catalog_dir)
    if directory is not None:
        override = directory / f"{name}.json"
        if override.is_file():
            logger.info("Using override model %s from %s", name, override)
            return CatalogEntry(load_model_file(override), f"override file {override}")
    return _builtin_entry(name)


def get_model(name, catalog_dir=None):
    return get_entry(name, catalog_dir).model


def list_models(catalog_dir=None):
    names = list(_BUILTINS) + ["T2xSigma(g)"]
    directory = catalog_dir_from_env(catalog_dir)
    if directory is not None and directory.is_dir():
        names += sorted(p.stem for p in directory.glob("*.json") if p.stem not in names)
    return names


def read_class(lattice, value, field="class"):
    """A class given either as a list of rationals or as a class literal"""
    if isinstance(value, str):
        return parse_class(lattice, value)
    if not isinstance(value, list):
        raise SchemaError(f"{field} must be a list of rationals or a class expression")
    try:
        return CohomClass(tuple(value), lattice)
    except MismatchedLattice as exc:
        raise SchemaError(f"{field}: {exc}") from exc


_REQUIRED = {
    "name": str,
    "b_plus": int,
    "b_one": int,
    "minimal": bool,
    "lattice": dict,
    "exceptional": list,
}


def load_model(data):
    """Validate model JSON (text or parsed object) into a FourManifoldModel"""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"model is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("model must be a JSON object")

    for key, kind in _REQUIRED.items():
        if key not in data:
            raise SchemaError(f"model is missing {key!r}")
        value = data[key]
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            raise SchemaError(f"model field {key!r} must be {kind.__name__}")
    if "k_class" not in data:
        raise SchemaError("model is missing 'k_class'")

    lattice = IntersectionLattice.from_json(data["lattice"])
    tag = data.get("cone_table_tag")
    if tag is not None:
        try:
            tag = ConeTableTag(tag)
        except ValueError:
            raise SchemaError(f"unknown cone_table_tag {tag!r}") from None
    fiber = data.get("fiber_class")

    return FourManifoldModel(
        name=data["name"],
        lattice=lattice,
        k_class=read_class(lattice, data["k_class"], "k_class"),
        exceptional=[read_class(lattice, e, "exceptional") for e in data["exceptional"]],
        b_plus=data["b_plus"],
        b_one=data["b_one"],
        minimal=data["minimal"],
        fiber_class=None if fiber is None else read_class(lattice, fiber, "fiber_class"),
        cone_table_tag=tag,
        half_space_certified=bool(data.get("half_space_certified", False)),
    )


def serialize_model(model):
    return model.to_json()


def load_model_file(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read model file {path}: {exc}") from exc
    return load_model(text)


def resolve_model(ref, catalog_dir=None):
    """A catalog name, a path to model JSON, or an inline model object"""
    if isinstance(ref, dict):
        return load_model(ref)
    if not isinstance(ref, str):
        raise SchemaError(f"model reference must be a name, path or object, got {ref!r}")
    if ref.endswith(".json") or Path(ref).is_file():
        return load_model_file(ref)
    return get_model(ref, catalog_dir)
