from __future__ import annotations

import numpy as np
import pytest

from geoseg.config import RenderStyle
from geoseg.errors import InvalidParameter
from geoseg.geometry.lines import Pose
from geoseg.synthetic import (
    LENGTH_RANGE,
    MIN_RANGE,
    gen_scene,
    make_ba_problem,
    project_segment,
    render,
    single_line_scene,
)


class TestScene:
    def test_deterministic(self):
        np.testing.assert_array_equal(gen_scene(5, 20).segments3d, gen_scene(5, 20).segments3d)

    def test_seed_changes_scene(self):
        assert not np.array_equal(gen_scene(5, 20).segments3d, gen_scene(6, 20).segments3d)

    def test_constraints(self):
        scene = gen_scene(1, 50)
        assert len(scene) == 50
        pts = scene.segments3d
        assert np.all(np.abs(pts) <= 5.0)
        lengths = np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)
        assert np.all((lengths >= LENGTH_RANGE[0] - 1e-12) & (lengths <= LENGTH_RANGE[1] + 1e-12))
        for a, b in pts:
            s = np.linspace(0.0, 1.0, 200)[:, None]
            assert np.min(np.linalg.norm(a + s * (b - a), axis=1)) >= MIN_RANGE - 1e-3

    def test_needs_lines(self):
        with pytest.raises(InvalidParameter):
            gen_scene(1, 0)


class TestProjectSegment:
    def test_behind_pinhole_is_invisible(self, pinhole):
        pieces, lengths, polylines = project_segment(pinhole, np.array([-1.0, 0.0, -3.0]), np.array([1.0, 0.0, -3.0]))
        assert pieces == [] and lengths == [] and polylines == []

    def test_blind_spot_splits_segment(self, pal):
        pieces, lengths, _ = project_segment(pal, np.array([-4.0, 0.0, 1.0]), np.array([4.0, 0.0, 1.0]))
        assert len(pieces) == 2
        for piece in pieces:
            assert pal.is_valid_bearing(piece.p_start)
            assert pal.is_valid_bearing(piece.p_end)
        assert all(length > 30 for length in lengths)

    def test_equirect_seam_splits_polyline_only(self, equirect):
        pieces, _, polylines = project_segment(equirect, np.array([-4.0, -1.0, 0.2]), np.array([-4.0, 1.0, 0.3]))
        assert len(pieces) == 1
        assert len(polylines) == 2

    def test_short_pieces_are_dropped(self, pinhole):
        a, b = np.array([0.0, 0.0, 10.0]), np.array([0.01, 0.0, 10.0])
        pieces, _, polylines = project_segment(pinhole, a, b, min_px=30.0)
        assert pieces == []
        assert len(polylines) == 1


class TestRender:
    def test_image_and_ground_truth(self, fisheye):
        frame = render(gen_scene(2, 30), Pose.identity(), fisheye)
        assert frame.image.shape == (640, 640)
        assert frame.image.dtype == np.uint8
        assert frame.image[0, 0] == RenderStyle().outside_value
        assert frame.gt
        for gt in frame.gt:
            assert gt.length_px >= RenderStyle().min_gt_px
            assert fisheye.is_valid_bearing(gt.geo.p_start)

    def test_line_is_drawn_on_its_ground_truth(self, pinhole):
        frame = render(single_line_scene([-1.0, -0.5, 4.0], [1.0, 0.6, 4.0]), Pose.identity(), pinhole)
        (gt,) = frame.gt
        mid = gt.geo.p_start + gt.geo.p_end
        x, y = np.rint(pinhole.project(mid / np.linalg.norm(mid))).astype(int)
        assert frame.image[y, x] < RenderStyle().background - 100

    def test_noise_is_seeded(self, pinhole):
        scene = single_line_scene([-1.0, -0.5, 4.0], [1.0, 0.6, 4.0])
        style = RenderStyle(noise_sigma=3.0)
        first = render(scene, Pose.identity(), pinhole, style, noise_seed=4).image
        second = render(scene, Pose.identity(), pinhole, style, noise_seed=4).image
        np.testing.assert_array_equal(first, second)
        assert not np.array_equal(first, render(scene, Pose.identity(), pinhole).image)

    def test_same_seed_gives_identical_output(self, fisheye):
        first = render(gen_scene(9, 30), Pose.identity(), fisheye)
        second = render(gen_scene(9, 30), Pose.identity(), fisheye)
        assert first.image.tobytes() == second.image.tobytes()
        assert [g.line_id for g in first.gt] == [g.line_id for g in second.gt]
        for a, b in zip(first.gt, second.gt):
            np.testing.assert_array_equal(a.geo.k, b.geo.k)
            np.testing.assert_array_equal(a.geo.p_start, b.geo.p_start)
            np.testing.assert_array_equal(a.geo.p_end, b.geo.p_end)

    @pytest.mark.parametrize("name", ["fisheye", "pal", "equirect", "pinhole"])
    def test_ground_truth_endpoints_lie_on_their_circle(self, name, request):
        model = request.getfixturevalue(name)
        frame = render(gen_scene(4, 30), Pose.identity(), model)
        assert frame.gt
        for gt in frame.gt:
            assert abs(gt.geo.k @ gt.geo.p_start) < 1e-12
            assert abs(gt.geo.k @ gt.geo.p_end) < 1e-12
            assert np.linalg.norm(gt.geo.k) == pytest.approx(1.0, abs=1e-12)

    def test_pose_moves_the_view(self, fisheye):
        scene = gen_scene(2, 30)
        moved = render(scene, Pose.from_rotvec(np.array([0.0, 0.3, 0.0]), np.zeros(3)), fisheye)
        assert not np.array_equal(moved.image, render(scene, Pose.identity(), fisheye).image)


class TestBaProblem:
    def test_shapes_and_gauge(self):
        synthetic = make_ba_problem(0, n_poses=4, n_points=20, n_lines=6)
        problem = synthetic.problem
        assert len(problem.poses) == 4
        assert len(problem.points) == 20
        assert len(problem.lines) == 6
        assert len(problem.point_obs) == 80
        assert len(problem.line_obs) == 24
        assert problem.is_fully_fixed(0)
        assert problem.fixed[1].tolist() == [False, False, False, True, False, False]
        problem.validate()

    def test_fixed_components_are_not_perturbed(self):
        synthetic = make_ba_problem(0, n_poses=3, n_points=10, n_lines=3)
        assert synthetic.problem.poses[0] is synthetic.truth.poses[0]
        assert synthetic.problem.poses[1].t[0] == synthetic.truth.poses[1].t[0]
        assert not np.allclose(synthetic.problem.poses[2].t, synthetic.truth.poses[2].t)

    def test_outliers(self):
        synthetic = make_ba_problem(0, n_poses=3, n_points=20, n_lines=3, outlier_frac=0.1)
        assert len(synthetic.outliers) == 6
        idx = synthetic.outliers[0]
        bent = synthetic.problem.point_obs[idx].bearing
        clean = synthetic.truth.point_obs[idx].bearing
        assert np.degrees(np.arccos(np.clip(bent @ clean, -1, 1))) == pytest.approx(10.0, abs=1e-6)

    def test_deterministic(self):
        a = make_ba_problem(3, n_poses=3, n_points=10, n_lines=3).problem
        b = make_ba_problem(3, n_poses=3, n_points=10, n_lines=3).problem
        for pa, pb in zip(a.poses, b.poses):
            np.testing.assert_array_equal(pa.q, pb.q)
            np.testing.assert_array_equal(pa.t, pb.t)

    def test_needs_two_poses(self):
        with pytest.raises(InvalidParameter):
            make_ba_problem(0, n_poses=1)

    def test_many_lines_are_all_delivered(self):
        synthetic = make_ba_problem(2, n_poses=3, n_points=10, n_lines=150)
        assert len(synthetic.problem.lines) == 150
        assert len(synthetic.problem.line_obs) == 450

    def test_line_shortfall_is_reported(self, monkeypatch):
        through_camera = single_line_scene([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        monkeypatch.setattr("geoseg.synthetic.gen_scene", lambda *args, **kwargs: through_camera)
        with pytest.raises(InvalidParameter, match="lines keep clear"):
            make_ba_problem(0, n_poses=3, n_points=10, n_lines=2)
