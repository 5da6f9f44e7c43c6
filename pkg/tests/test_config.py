from __future__ import annotations

import argparse

import pytest

from geoseg.config import (
    DEFAULT_SEED,
    SEED_ENV,
    ConfigLoader,
    DetectorParams,
    MatchParams,
    RenderStyle,
    SolveOptions,
    add_dataclass_arguments,
    params_from_args,
)
from geoseg.errors import InvalidParameter, ParseError
from geoseg.geometry.camera import Equirectangular, Pinhole, Scaramuzza, UnifiedMei


class TestFixtures:
    def test_bundled_cameras(self):
        assert ConfigLoader.fixture_names() == ["equirect", "fisheye_mei", "pal_scaramuzza", "pinhole"]

    @pytest.mark.parametrize(
        "name, kind",
        [("equirect", Equirectangular), ("fisheye_mei", UnifiedMei), ("pal_scaramuzza", Scaramuzza), ("pinhole", Pinhole)],
    )
    def test_fixture_types(self, name, kind):
        assert isinstance(ConfigLoader.camera_fixture(name), kind)

    def test_missing_file(self, tmp_path):
        missing = tmp_path / "nope.json"
        with pytest.raises(FileNotFoundError, match="nope.json"):
            ConfigLoader.load_camera(missing)

    def test_bom_is_accepted(self, tmp_path):
        path = tmp_path / "cam.json"
        path.write_text('\ufeff{"model":"equirectangular","width":64,"height":32}', encoding="utf-8")
        assert ConfigLoader.load_camera(path).size == (64, 32)

    def test_bad_file(self, tmp_path):
        path = tmp_path / "cam.json"
        path.write_text('{"model":"fisheye"}', encoding="utf-8")
        with pytest.raises(ParseError):
            ConfigLoader.load_camera(path)


class TestSeed:
    def test_cli_value_wins(self):
        assert ConfigLoader.resolve_seed(3, {SEED_ENV: "9"}) == 3

    def test_environment(self):
        assert ConfigLoader.resolve_seed(None, {SEED_ENV: " 11 "}) == 11

    def test_default(self):
        assert ConfigLoader.resolve_seed(None, {}) == DEFAULT_SEED
        assert ConfigLoader.resolve_seed(None, {SEED_ENV: ""}) == DEFAULT_SEED

    def test_garbage(self):
        with pytest.raises(ValueError, match=SEED_ENV):
            ConfigLoader.resolve_seed(None, {SEED_ENV: "seven"})


class TestParams:
    def test_defaults(self):
        params = DetectorParams()
        assert (params.t_anchor, params.t_fit_px, params.min_segment_len_px) == (8.0, 1.5, 30)
        assert MatchParams().m_deg == 10.0
        assert SolveOptions().robust

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: DetectorParams(t_fit_px=0),
            lambda: DetectorParams(min_fit_len=40, min_segment_len_px=30),
            lambda: MatchParams(hamming_frac_max=1.0),
            lambda: MatchParams(min_overlap_slices=0),
            lambda: SolveOptions(max_iters=0),
            lambda: RenderStyle(background=300),
            lambda: RenderStyle(noise_sigma=-1.0),
        ],
    )
    def test_invalid_values(self, factory):
        with pytest.raises(InvalidParameter):
            factory()


class TestArgparseBridge:
    def _parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser()
        add_dataclass_arguments(parser, DetectorParams)
        add_dataclass_arguments(parser, SolveOptions)
        return parser

    def test_absent_flags_keep_defaults(self):
        args = self._parser().parse_args([])
        assert params_from_args(args, DetectorParams) == DetectorParams()
        assert params_from_args(args, SolveOptions) == SolveOptions()

    def test_overrides(self):
        args = self._parser().parse_args(["--t-fit-px", "2.5", "--min-fit-len", "10", "--no-robust"])
        params = params_from_args(args, DetectorParams)
        assert params.t_fit_px == 2.5
        assert params.min_fit_len == 10
        assert params_from_args(args, SolveOptions).robust is False

    def test_wrong_type_is_a_usage_error(self):
        with pytest.raises(SystemExit):
            self._parser().parse_args(["--min-fit-len", "1.5"])
