import copy
import tempfile
from pathlib import Path

import numpy as np
import pytest

from dev.mocks import MockArtifactWriter, MockPresetRepository
from src.backend.models.model_spec import (
    BirthFunction,
    DelayedMap,
    DelayFunctional,
    ModelSpec,
    Nonlinearity,
    Smoothing,
)
from src.backend.models.spectrum import SpectralState
from src.backend.services.config_parser import ConfigParser
from src.backend.services.spectral_core import build_dirichlet_spectrum
from src.protocols.schemas import BirthKind, DelayKind, SmoothingKind

BASE_CONFIG = {
    "model": {
        "spectrum": {"m": 8, "L": float(np.pi)},
        "eta": {"kind": "norm_sigmoid", "r": 1.0, "params": {"kappa": 1.0}},
        "fmap": {
            "b": {"kind": "nicholson", "c1": -5.0, "c2": 1.0},
            "B": {"kind": "lowpass", "K": 4},
        },
        "g": {"a1": 0.0, "a2": 1.0, "a3": 0.0},
    },
    "integrator": {"dt": 0.05, "scheme": "etd_rk2", "T_final": 1.0, "record_every": 2},
    "experiment": {"kind": "simulate", "seed": 3, "params": {}},
}


@pytest.fixture
def project_root():
    """Get the project root directory"""
    return Path(__file__).parent.parent


@pytest.fixture
def presets_dir(project_root):
    """Directory of the bundled presets"""
    return project_root / "src" / "backend" / "presets"


@pytest.fixture
def preset_repository(presets_dir):
    """MockPresetRepository over the bundled presets"""
    return MockPresetRepository(presets_dir=presets_dir)


@pytest.fixture
def empty_preset_repository():
    """MockPresetRepository over an empty directory"""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield MockPresetRepository(presets_dir=Path(temp_dir))


@pytest.fixture
def temp_output_dir():
    """Temporary directory for test outputs"""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield temp_dir


@pytest.fixture
def memory_writer():
    """In-memory artifact writer"""
    return MockArtifactWriter()


@pytest.fixture
def config_dict():
    """Fresh copy of a small, valid experiment config"""
    return copy.deepcopy(BASE_CONFIG)


@pytest.fixture
def config_parser():
    return ConfigParser()


@pytest.fixture
def small_config(config_dict, config_parser):
    """Parsed simulate config on an 8-mode Nicholson instance"""
    return config_parser.build(config_dict)


def make_heat_spec(m: int = 4, r: float = 1.0) -> ModelSpec:
    """Pure heat flow: F, G and h switched off"""
    return ModelSpec(
        spectrum=build_dirichlet_spectrum(m),
        eta=DelayFunctional(DelayKind.CONSTANT, r=r, tau0=r),
        fmap=DelayedMap(
            BirthFunction(BirthKind.LINEAR, slope=0.0), Smoothing(SmoothingKind.IDENTITY)
        ),
        gterm=Nonlinearity(a1=0.0, a2=0.0, a3=0.0),
        h=SpectralState(np.zeros(m)),
    )


def make_nicholson_spec(m: int = 8, r: float = 1.0) -> ModelSpec:
    return ModelSpec(
        spectrum=build_dirichlet_spectrum(m),
        eta=DelayFunctional(DelayKind.NORM_SIGMOID, r=r, kappa=1.0),
        fmap=DelayedMap(
            BirthFunction(BirthKind.NICHOLSON, c1=-5.0, c2=1.0),
            Smoothing(SmoothingKind.LOWPASS, K=min(4, m)),
        ),
        gterm=Nonlinearity(a1=0.0, a2=1.0, a3=0.0),
        h=SpectralState(np.zeros(m)),
    )


@pytest.fixture
def heat_spec():
    return make_heat_spec()


@pytest.fixture
def nicholson_spec():
    return make_nicholson_spec()


@pytest.fixture
def heat_spec_factory():
    return make_heat_spec


@pytest.fixture
def nicholson_spec_factory():
    return make_nicholson_spec
