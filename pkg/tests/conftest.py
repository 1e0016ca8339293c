"""Shared fixtures: small cameras, gravities and rendered fields."""

import math

import numpy as np
import pytest

from persfit.core.settings import get_settings
from persfit.geometry.camera_model import CameraModel, CameraParams
from persfit.geometry.gravity_manifold import GravityDir, from_roll_pitch
from persfit.geometry.perspective_field import render_field
from persfit.io.fieldio import save_field
from persfit.io.textio import save_camera, save_gravity


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    monkeypatch.setenv("PERSFIT_THREADS", "2")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def pinhole():
    return CameraParams.from_size(64, 48, 50.0)


@pytest.fixture
def radial1():
    return CameraParams.from_size(64, 48, 50.0, CameraModel.RADIAL1, k1=-0.08)


@pytest.fixture
def radial2():
    return CameraParams.from_size(64, 48, 50.0, CameraModel.RADIAL2, k1=-0.1, k2=0.02)


@pytest.fixture
def tilted():
    return from_roll_pitch(math.radians(12.0), math.radians(-20.0))


@pytest.fixture
def upright():
    return GravityDir.upright()


@pytest.fixture
def scene(tmp_path, pinhole, tilted):
    """A noiseless pinhole scenario written as a .pfld/.cam/.grav triple."""
    field = render_field(pinhole, tilted)
    save_field(field, tmp_path / "scene.pfld")
    save_camera(pinhole, tmp_path / "scene.cam")
    save_gravity(tilted, tmp_path / "scene.grav")
    return tmp_path / "scene"
