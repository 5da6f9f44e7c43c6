from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from geoseg.config import ConfigLoader  # noqa: E402
from geoseg.geometry.camera import CameraModel  # noqa: E402


@pytest.fixture(scope="session")
def fisheye() -> CameraModel:
    return ConfigLoader.camera_fixture("fisheye_mei")


@pytest.fixture(scope="session")
def pal() -> CameraModel:
    return ConfigLoader.camera_fixture("pal_scaramuzza")


@pytest.fixture(scope="session")
def equirect() -> CameraModel:
    return ConfigLoader.camera_fixture("equirect")


@pytest.fixture(scope="session")
def pinhole() -> CameraModel:
    return ConfigLoader.camera_fixture("pinhole")


@pytest.fixture(params=["fisheye_mei", "pal_scaramuzza", "equirect", "pinhole"])
def any_model(request) -> CameraModel:
    return ConfigLoader.camera_fixture(request.param)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


def random_valid_bearings(model: CameraModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform bearings inside the model's FoV band whose projection lands in the image."""
    out = []
    while sum(len(chunk) for chunk in out) < n:
        b = rng.normal(size=(4 * n, 3))
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        pixels, ok = model.project_many(b)
        ok &= model.in_image(pixels)
        out.append(b[ok])
    return np.concatenate(out)[:n]
