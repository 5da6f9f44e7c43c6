from __future__ import annotations

import math

import cv2
import numpy as np
import pytest

from geoseg import imageio
from geoseg.errors import ParseError
from geoseg.evaluation import PairResult
from geoseg.geometry.sphere import segment_from_endpoints
from geoseg.synthetic import GtSegment


def _result(rep: float, le, n_a: int, n_b: int) -> PairResult:
    return PairResult(rep=rep, le=le, n_detected_a=n_a, n_detected_b=n_b, metric="orth", epsilon=5.0)


class TestAtomicWrite:
    def test_creates_parent_directories(self, tmp_path):
        target = tmp_path / "a" / "b" / "out.txt"
        imageio.atomic_write(target, "hello\n")
        assert target.read_text() == "hello\n"

    def test_replaces_existing_file_and_leaves_no_temp(self, tmp_path):
        target = tmp_path / "out.bin"
        target.write_bytes(b"old")
        imageio.atomic_write(target, b"new")
        assert target.read_bytes() == b"new"
        assert [p.name for p in tmp_path.iterdir()] == ["out.bin"]

    def test_dash_goes_to_stdout(self, capsys):
        imageio.atomic_write("-", "id_a,id_b\n")
        assert capsys.readouterr().out == "id_a,id_b\n"


class TestImages:
    def test_pgm_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, size=(24, 32), dtype=np.uint8)
        path = tmp_path / "frame.pgm"
        imageio.write_image(path, img)
        assert path.read_bytes().startswith(b"P5")
        np.testing.assert_array_equal(imageio.read_image(path), img)

    def test_colour_is_reduced_to_luma(self, tmp_path):
        rgb = np.zeros((4, 4, 3), dtype=np.uint8)
        rgb[..., 0] = 200  # red
        rgb[..., 2] = 100  # blue
        path = tmp_path / "frame.ppm"
        assert cv2.imwrite(str(path), rgb[..., ::-1].copy())
        gray = imageio.read_image(path)
        assert gray.shape == (4, 4)
        assert int(gray[0, 0]) == round(0.299 * 200 + 0.114 * 100)

    def test_missing_image(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="Image not found at"):
            imageio.read_image(tmp_path / "nope.pgm")

    def test_garbage_image(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"not an image at all")
        with pytest.raises(ParseError):
            imageio.read_image(path)


class TestGroundTruth:
    def test_write_then_read(self, tmp_path):
        a = np.array([1.0, 0.0, 0.2])
        b = np.array([0.8, 0.6, 0.1])
        geo = segment_from_endpoints(a / np.linalg.norm(a), b / np.linalg.norm(b))
        path = tmp_path / "gt.csv"
        imageio.write_gt(path, [GtSegment(7, geo, 120.0)])
        assert path.read_text().splitlines()[0] == ",".join(imageio.GT_HEADER)
        assert path.read_text().splitlines()[1].startswith("7,")
        (back,) = imageio.read_gt(path)
        np.testing.assert_allclose(back.k, geo.k, atol=1e-8)
        np.testing.assert_allclose(back.p_start, geo.p_start, atol=1e-8)
        np.testing.assert_allclose(back.p_end, geo.p_end, atol=1e-8)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "gt.csv"
        path.write_text("id,x,y\n0,1,2\n")
        with pytest.raises(ParseError, match="expected header"):
            imageio.read_gt(path)


class TestTables:
    def test_matches(self):
        text = imageio.matches_csv([(0, 3, 0.25), (2, 1, 0.5)])
        assert text.splitlines() == ["id_a,id_b,score", "0,3,0.25", "2,1,0.5"]

    def test_eval_mean_row(self):
        text = imageio.eval_csv([("p0", _result(0.5, 1.0, 10, 12)), ("p1", _result(1.0, 3.0, 20, 18))])
        rows = text.splitlines()
        assert rows[0] == "pair_id,rep,le,n_a,n_b"
        assert rows[-1] == "MEAN,0.75,2,15,15"

    def test_eval_empty_localization_error(self):
        text = imageio.eval_csv([("p0", _result(0.0, None, 0, 4))])
        assert text.splitlines()[1] == "p0,0,,0,4"
        assert text.splitlines()[2] == "MEAN,0,,0,4"

    def test_descriptor_rows_for_missing(self):
        assert imageio.descriptors_csv([None]).splitlines()[1] == "0,0"


class TestPairs:
    def test_relative_paths_and_degrees(self, tmp_path):
        pairs = tmp_path / "lists" / "pairs.txt"
        pairs.parent.mkdir()
        pairs.write_text("# comment\n\np0 a.pgm /abs/b.pgm 0 0 90\n")
        ((pair_id, a, b, rotvec),) = imageio.read_pairs(pairs)
        assert pair_id == "p0"
        assert a == pairs.parent / "a.pgm"
        assert str(b) == "/abs/b.pgm"
        np.testing.assert_allclose(rotvec, [0.0, 0.0, math.pi / 2])

    @pytest.mark.parametrize("row", ["p0 a.pgm b.pgm 0 0", "p0 a.pgm b.pgm 0 0 x"])
    def test_malformed(self, tmp_path, row):
        pairs = tmp_path / "pairs.txt"
        pairs.write_text(row + "\n")
        with pytest.raises(ParseError, match="pairs.txt:1"):
            imageio.read_pairs(pairs)

    def test_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            imageio.read_pairs(tmp_path / "pairs.txt")
