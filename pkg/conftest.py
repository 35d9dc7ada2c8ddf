import os
from pathlib import Path

import pytest

import catalog
from fibersum import FiberSumSpec, build_sum

SPECS_DIR = Path(__file__).parent / "specs"


@pytest.fixture
def specs_dir():
    return SPECS_DIR


@pytest.fixture
def t4():
    return catalog.get_model("T4")


@pytest.fixture
def e1():
    return catalog.get_model("E1")


@pytest.fixture
def k3():
    return catalog.get_model("K3")


@pytest.fixture
def sigma2():
    return catalog.get_model("T2xSigma(2)")


@pytest.fixture
def t4t4_spec(t4):
    return FiberSumSpec(t4, t4, t4.fiber_class, t4.fiber_class, h1_injects_into_y=True)


@pytest.fixture
def t4t4(t4t4_spec):
    """(spec, model, basis) of T4 #_f T4"""
    model, basis = build_sum(t4t4_spec)
    return t4t4_spec, model, basis


@pytest.fixture
def no_catalog_env(mocker):
    mocker.patch.dict(os.environ)
    os.environ.pop(catalog.CATALOG_ENV, None)


@pytest.fixture
def enriques():
    """User model: minimal elliptic surface with p_g = 0, form H + (-E8)"""
    return catalog.load_model_file(SPECS_DIR / "enriques.json")
