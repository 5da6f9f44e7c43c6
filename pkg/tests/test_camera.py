from __future__ import annotations

import json
import math

import numpy as np
import pytest

from geoseg.errors import BearingOutOfFov, InvalidParameter, ParseError, PixelOutOfDomain
from geoseg.geometry.camera import (
    Equirectangular,
    Pinhole,
    Scaramuzza,
    UnifiedMei,
    load_model,
    model_to_dict,
    pixel_bearings,
)

from conftest import random_valid_bearings


def _polar(deg: float) -> np.ndarray:
    t = math.radians(deg)
    return np.array([math.sin(t), 0.0, math.cos(t)])


def _angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(np.sum(a * b, axis=1), -1.0, 1.0))


class TestProject:
    def test_equirect_centre_and_quarter(self):
        model = Equirectangular(width=1024, height=512)
        np.testing.assert_allclose(model.project([1.0, 0.0, 0.0]), [512.0, 256.0], atol=1e-9)
        np.testing.assert_allclose(model.project([0.0, 1.0, 0.0]), [768.0, 256.0], atol=1e-9)

    def test_out_of_band_raises(self, pal):
        with pytest.raises(BearingOutOfFov):
            pal.project([0.0, 0.0, 1.0])

    def test_project_many_never_raises(self, pal):
        bearings = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [np.nan, 0.0, 0.0]])
        _, ok = pal.project_many(bearings)
        assert ok.tolist() == [False, True, False]

    def test_equirect_back_meridian_maps_to_column_zero(self):
        model = Equirectangular(width=1024, height=512)
        for bearing in ([-1.0, 0.0, 0.0], [-1.0, -0.0, 0.0], [-0.6, 0.0, 0.8]):
            x, _ = model.project(bearing)
            assert x == 0.0
        pixels, ok = model.project_many(np.array([[-1.0, 1e-9, 0.0], [-1.0, -1e-9, 0.0]]))
        assert ok.all()
        assert 0.0 <= pixels[:, 0].min() and pixels[:, 0].max() < 1024.0

    def test_equirect_right_edge_is_the_left_edge(self):
        model = Equirectangular(width=1024, height=512)
        for y in (10.0, 256.0, 500.0):
            np.testing.assert_allclose(model.unproject([1024.0, y]), model.unproject([0.0, y]), atol=1e-12)


class TestUnproject:
    def test_equirect_centre(self):
        np.testing.assert_allclose(Equirectangular(width=1024, height=512).unproject([512.0, 256.0]), [1.0, 0.0, 0.0], atol=1e-12)

    def test_pinhole_principal_point(self, pinhole):
        np.testing.assert_allclose(pinhole.unproject([200.0, 200.0]), [0.0, 0.0, 1.0], atol=1e-12)

    def test_mei_principal_point(self, fisheye):
        np.testing.assert_allclose(fisheye.unproject([320.0, 320.0]), [0.0, 0.0, 1.0], atol=1e-12)

    def test_pal_blind_spot_is_out_of_domain(self, pal):
        with pytest.raises(PixelOutOfDomain):
            pal.unproject([640.0, 480.0])

    def test_bearings_are_unit(self, any_model, rng):
        width, height = any_model.size
        pixels = rng.uniform([0, 0], [width - 1, height - 1], size=(2000, 2))
        bearings, ok = any_model.unproject_many(pixels)
        np.testing.assert_allclose(np.linalg.norm(bearings[ok], axis=1), 1.0, atol=1e-9)


class TestFovBand:
    def test_pal_band(self, pal):
        assert not pal.is_valid_bearing(_polar(0.0))
        assert pal.is_valid_bearing(_polar(90.0))
        assert pal.is_valid_bearing(_polar(119.9))
        assert not pal.is_valid_bearing(_polar(120.1))

    def test_zero_vector_is_invalid(self, fisheye):
        assert not fisheye.is_valid_bearing(np.zeros(3))


class TestRoundTrips:
    def test_bearing_round_trip(self, any_model, rng):
        b = random_valid_bearings(any_model, rng, 10_000)
        pixels, ok = any_model.project_many(b)
        back, ok_back = any_model.unproject_many(pixels)
        good = ok & ok_back
        assert good.mean() > 0.99
        assert np.max(_angles(back[good], b[good])) < 1e-6

    def test_pixel_round_trip(self, any_model, rng):
        width, height = any_model.size
        pixels = rng.uniform([0, 0], [width - 1, height - 1], size=(10_000, 2))
        bearings, ok = any_model.unproject_many(pixels)
        again, ok_again = any_model.project_many(bearings[ok])
        diff = any_model.pixel_distance(again[ok_again], pixels[ok][ok_again])
        assert np.max(diff) < 0.01

    def test_scaramuzza_negative_half_plane(self, pal):
        b = _polar(115.0)
        np.testing.assert_allclose(pal.unproject(pal.project(b)), b, atol=1e-6)

    def test_mei_xi_zero_matches_pinhole(self, rng):
        mei = UnifiedMei(xi=0.0, fx=300.0, fy=300.0, cx=200.0, cy=200.0, fov_max_deg=60.0)
        pin = Pinhole(fx=300.0, fy=300.0, cx=200.0, cy=200.0)
        b = random_valid_bearings(mei, rng, 500)
        p_mei, _ = mei.project_many(b)
        p_pin, _ = pin.project_many(b)
        np.testing.assert_allclose(p_mei, p_pin, atol=1e-9)

    def test_mei_with_distortion_round_trip(self, rng):
        model = UnifiedMei(xi=0.9, fx=260.0, fy=255.0, cx=320.0, cy=310.0, k1=-0.05, k2=0.01, p1=1e-4, p2=-2e-4,
                           width=640, height=640, fov_max_deg=100.0)
        b = random_valid_bearings(model, rng, 2000)
        pixels, _ = model.project_many(b)
        back, ok = model.unproject_many(pixels)
        assert np.max(_angles(back[ok], b[ok])) < 1e-6


class TestPixelDelta:
    def test_equirect_wraps_at_seam(self, equirect):
        assert equirect.pixel_distance(np.array([1023.0, 100.0]), np.array([1.0, 100.0])) == pytest.approx(2.0)

    def test_fisheye_does_not_wrap(self, fisheye):
        assert fisheye.pixel_distance(np.array([639.0, 100.0]), np.array([1.0, 100.0])) == pytest.approx(638.0)


class TestBearingMap:
    def test_cached_and_read_only(self, fisheye):
        bearings, valid = pixel_bearings(fisheye)
        again, _ = pixel_bearings(fisheye)
        assert bearings is again
        assert bearings.shape == (640, 640, 3)
        assert not bearings.flags.writeable
        assert valid[320, 320]
        assert not valid[0, 0]


class TestLoadModel:
    def test_equirect(self):
        model = load_model('{"model":"equirectangular","width":1024,"height":512}')
        assert isinstance(model, Equirectangular)
        assert model.size == (1024, 512)

    def test_missing_model_key(self):
        with pytest.raises(ParseError):
            load_model('{"width": 10}')

    def test_invalid_json(self):
        with pytest.raises(ParseError):
            load_model("{not json")

    def test_unknown_key(self):
        with pytest.raises(ParseError):
            load_model('{"model":"equirectangular","width":4,"height":2,"colour":"red"}')

    def test_zero_a0(self):
        text = json.dumps({"model": "scaramuzza", "a": [0, 0, 0.001, 0, 0], "cx": 10, "cy": 10,
                           "width": 20, "height": 20})
        with pytest.raises(InvalidParameter):
            load_model(text)

    def test_negative_focal_length(self):
        with pytest.raises(InvalidParameter):
            load_model('{"model":"pinhole","fx":-1,"fy":1,"cx":10,"cy":10}')

    def test_reversed_fov(self):
        with pytest.raises(InvalidParameter):
            load_model('{"model":"equirectangular","width":4,"height":2,"fov_deg":[90,10]}')

    def test_dict_round_trip(self, any_model):
        assert load_model(json.dumps(model_to_dict(any_model))) == any_model

    def test_mei_size_defaults_from_centre(self):
        model = load_model('{"model":"mei","xi":1,"fx":250,"fy":250,"cx":320,"cy":240}')
        assert model.size == (640, 480)

    def test_pal_fixture_band(self, pal):
        assert isinstance(pal, Scaramuzza)
        assert (pal.fov_min_deg, pal.fov_max_deg) == (40.0, 120.0)
