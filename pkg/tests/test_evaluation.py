from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from geoseg.errors import RotationTooLarge
from geoseg.evaluation import (
    Transport,
    d_orth,
    d_struct,
    evaluate_pair,
    gt_recall,
    localization_error,
    make_rotated_pair,
    match_precision,
    repeatability,
    rotation_angle_deg,
    segment_distance,
)
from geoseg.features.descriptor import describe_all, match
from geoseg.features.detector import detect
from geoseg.geometry.lines import Pose
from geoseg.geometry.sphere import GeodesicSegment, segment_from_endpoints
from geoseg.synthetic import gen_scene, render

IDENTITY = Transport(np.eye(3))


def _pinhole_row_segment(model, y_px: float, x0: float = 150.0, x1: float = 250.0) -> GeodesicSegment:
    return segment_from_endpoints(model.unproject([x0, y_px]), model.unproject([x1, y_px]))


def _fisheye_segments() -> list:
    out = []
    for yaw in (-0.4, 0.0, 0.4):
        a = np.array([math.sin(yaw) - 0.2, -0.3, 1.0])
        b = np.array([math.sin(yaw) + 0.2, 0.3, 1.0])
        out.append(segment_from_endpoints(a, b))
    return out


class TestDistances:
    def test_identical(self, pinhole):
        seg = _pinhole_row_segment(pinhole, 200.0)
        assert d_orth(pinhole, seg, seg) == pytest.approx(0.0, abs=1e-9)
        assert d_struct(pinhole, seg, seg) == pytest.approx(0.0, abs=1e-9)

    def test_parallel_offset(self, pinhole):
        s1 = _pinhole_row_segment(pinhole, 200.0)
        s2 = _pinhole_row_segment(pinhole, 207.0)
        assert d_orth(pinhole, s1, s2) == pytest.approx(7.0, abs=1e-3)
        assert d_struct(pinhole, s1, s2) == pytest.approx(7.0, abs=1e-6)

    def test_struct_ignores_direction(self, pinhole):
        seg = _pinhole_row_segment(pinhole, 180.0)
        assert d_struct(pinhole, seg, seg.reversed()) == pytest.approx(0.0, abs=1e-9)

    def test_orth_needs_overlap(self, pinhole):
        s1 = _pinhole_row_segment(pinhole, 200.0, 100.0, 150.0)
        s2 = _pinhole_row_segment(pinhole, 200.0, 200.0, 250.0)
        assert d_orth(pinhole, s1, s2) == math.inf
        assert d_struct(pinhole, s1, s2) == pytest.approx(100.0, abs=1e-6)

    def test_struct_ignores_overlap_along_the_line(self, pinhole):
        s1 = _pinhole_row_segment(pinhole, 200.0, 150.0, 250.0)
        s2 = _pinhole_row_segment(pinhole, 200.0, 160.0, 240.0)
        assert d_orth(pinhole, s1, s2) == pytest.approx(0.0, abs=1e-6)
        assert d_struct(pinhole, s1, s2) == pytest.approx(10.0, abs=1e-6)

    def test_unknown_metric(self, pinhole):
        seg = _pinhole_row_segment(pinhole, 200.0)
        with pytest.raises(ValueError):
            segment_distance(pinhole, seg, seg, "hausdorff")  # type: ignore[arg-type]


class TestRotatedPair:
    def test_equirect_yaw_is_a_column_roll(self, equirect, rng):
        img = rng.integers(0, 256, size=(512, 1024), dtype=np.uint8)
        R = Rotation.from_euler("z", 90, degrees=True).as_matrix()
        pair = make_rotated_pair(img, equirect, R)
        expected = np.roll(img, 1024 // 4, axis=1)
        np.testing.assert_array_equal(pair.image[2:-2], expected[2:-2])

    def test_identity_copies(self, fisheye, rng):
        img = rng.integers(0, 256, size=(640, 640), dtype=np.uint8)
        pair = make_rotated_pair(img, fisheye, np.eye(3))
        assert pair.image is not img
        np.testing.assert_array_equal(pair.image[320], img[320])
        assert pair.mask_a[320, 320] and pair.mask_b[320, 320]
        assert not pair.mask_a[0, 0]

    def test_rotation_limit(self, fisheye):
        R = Rotation.from_euler("y", 70, degrees=True).as_matrix()
        with pytest.raises(RotationTooLarge):
            make_rotated_pair(np.zeros((640, 640), dtype=np.uint8), fisheye, R)

    def test_explicit_limit_overrides_default(self, fisheye):
        R = Rotation.from_euler("y", 20, degrees=True).as_matrix()
        with pytest.raises(RotationTooLarge):
            make_rotated_pair(np.zeros((640, 640), dtype=np.uint8), fisheye, R, max_rotation_deg=10.0)

    def test_masks_shrink_with_rotation(self, fisheye):
        R = Rotation.from_euler("y", 30, degrees=True).as_matrix()
        pair = make_rotated_pair(np.zeros((640, 640), dtype=np.uint8), fisheye, R)
        still = make_rotated_pair(np.zeros((640, 640), dtype=np.uint8), fisheye, np.eye(3))
        assert pair.mask_a.sum() < still.mask_a.sum()
        assert pair.mask_b.sum() < still.mask_b.sum()

    def test_covisible_pixels_transport_into_the_other_mask(self, fisheye):
        R = Rotation.from_euler("y", 30, degrees=True).as_matrix()
        pair = make_rotated_pair(np.zeros((640, 640), dtype=np.uint8), fisheye, R)
        ys, xs = np.nonzero(pair.mask_a)
        pick = np.linspace(0, len(xs) - 1, 50).astype(int)
        for x, y in zip(xs[pick], ys[pick]):
            p = fisheye.project(pair.transport(fisheye.unproject([x, y])))
            assert fisheye.is_valid_pixel(p)

    def test_rotation_angle(self):
        assert rotation_angle_deg(Rotation.from_euler("x", 25, degrees=True).as_matrix()) == pytest.approx(25.0)


class TestRepeatability:
    def test_perfect_pair(self, fisheye):
        dets_a = _fisheye_segments()
        R = Rotation.from_euler("y", 10, degrees=True).as_matrix()
        dets_b = [seg.rotated(R) for seg in dets_a]
        result = repeatability(dets_a, dets_b, Transport(R), fisheye)
        assert result.rep == pytest.approx(1.0)
        assert result.le == pytest.approx(0.0, abs=1e-6)
        assert result.n_matched == 6
        assert not result.empty_side

    def test_empty_side(self, fisheye):
        result = repeatability(_fisheye_segments(), [], IDENTITY, fisheye)
        assert result.rep == 0.0
        assert result.le is None
        assert result.empty_side

    def test_one_to_one(self, fisheye):
        seg = _fisheye_segments()[1]
        result = repeatability([seg, seg], [seg], IDENTITY, fisheye)
        assert result.rep == pytest.approx(0.5 * (0.5 + 1.0))

    def test_epsilon(self, pinhole):
        s1 = _pinhole_row_segment(pinhole, 200.0)
        s2 = _pinhole_row_segment(pinhole, 207.0)
        assert repeatability([s1], [s2], IDENTITY, pinhole, eps_px=5.0).rep == 0.0
        assert repeatability([s1], [s2], IDENTITY, pinhole, eps_px=8.0).rep == 1.0
        assert localization_error([s1], [s2], IDENTITY, pinhole, eps_px=8.0) == pytest.approx(7.0, abs=1e-3)

    def test_non_positive_epsilon(self, pinhole):
        seg = _pinhole_row_segment(pinhole, 200.0)
        with pytest.raises(ValueError):
            repeatability([seg], [seg], IDENTITY, pinhole, eps_px=0.0)

    def test_masks_exclude_segments(self, pinhole):
        s1 = _pinhole_row_segment(pinhole, 200.0)
        far = _pinhole_row_segment(pinhole, 50.0)
        mask = np.zeros((400, 400), dtype=bool)
        mask[150:250] = True
        result = repeatability([s1, far], [s1], IDENTITY, pinhole, masks=(mask, mask))
        assert result.rep == pytest.approx(1.0)
        assert result.n_detected_a == 2

    def test_evaluate_pair(self, fisheye):
        dets = _fisheye_segments()
        lines = []
        result = evaluate_pair(None, None, fisheye, np.eye(3), lambda _: dets, log=lines.append)
        assert result.rep == pytest.approx(1.0)
        assert lines and lines[0].startswith("[info] pair:")


class TestPrecisionAndRecall:
    def test_precision(self, fisheye):
        dets = _fisheye_segments()
        assert match_precision([(0, 0, 1.0), (1, 2, 0.9)], dets, dets, IDENTITY, fisheye) == pytest.approx(0.5)
        assert match_precision([], dets, dets, IDENTITY, fisheye) is None

    def test_recall(self, fisheye):
        dets = _fisheye_segments()
        assert gt_recall(fisheye, dets, dets) == 1.0
        assert gt_recall(fisheye, dets[:1], dets) == pytest.approx(1 / 3)
        assert gt_recall(fisheye, [], []) == 1.0


@pytest.mark.slow
class TestRotatedPairProtocol:
    SEEDS = (0, 1, 2, 3)

    def _pairs(self, model):
        for seed in self.SEEDS:
            rng = np.random.default_rng(seed)
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            R = Rotation.from_rotvec(math.radians(rng.uniform(10.0, 60.0)) * axis).as_matrix()
            frame = render(gen_scene(seed, 40), Pose.identity(), model)
            pair = make_rotated_pair(frame.image, model, R)
            yield frame.image, pair, detect(frame.image, model), detect(pair.image, model)

    @pytest.mark.parametrize("name", ["fisheye", "pal"])
    def test_repeatability_and_localization(self, name, request):
        model = request.getfixturevalue(name)
        reps, les = [], []
        for _, pair, segs_a, segs_b in self._pairs(model):
            masks = (pair.mask_a, pair.mask_b)
            reps.append(repeatability(segs_a, segs_b, pair.transport, model, 5.0, "orth", masks).rep)
            le = localization_error(segs_a, segs_b, pair.transport, model, 5.0, "orth", masks)
            if le is not None:
                les.append(le)
        assert np.mean(reps) >= 0.5
        assert les and np.mean(les) <= 2.0

    @pytest.mark.parametrize("name", ["fisheye", "pal"])
    def test_descriptor_matches_are_mostly_correct(self, name, request):
        model = request.getfixturevalue(name)
        precisions = []
        for image_a, pair, segs_a, segs_b in self._pairs(model):
            matches = match(describe_all(image_a, model, segs_a), describe_all(pair.image, model, segs_b))
            precision = match_precision(matches, segs_a, segs_b, pair.transport, model)
            if precision is not None:
                precisions.append(precision)
        assert precisions and np.mean(precisions) >= 0.8
