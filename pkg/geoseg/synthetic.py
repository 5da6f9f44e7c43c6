"""Synthetic wireframe scenes with exact geodesic ground truth."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import cv2
import numpy as np
from scipy.spatial.transform import Rotation

from .backend.problem import BaProblem, LineMeasurement, PointFeature, PointObservation
from .config import RenderStyle
from .errors import InvalidParameter
from .geometry.camera import CameraModel, pixel_bearings
from .geometry.lines import (
    LineObservation,
    OrthonormalLine,
    PluckerLine,
    Pose,
    plucker_to_orthonormal,
    transform_line,
)
from .geometry.sphere import GeodesicSegment, GreatCircle

logger = logging.getLogger(__name__)

DEFAULT_BOUNDS = ((-5.0, -5.0, -5.0), (5.0, 5.0, 5.0))
LENGTH_RANGE = (0.5, 3.0)
MIN_RANGE = 1.0
MAX_STEP_PX = 0.5
BISECT_ITERS = 48
DRAW_SHIFT = 4
MAX_SAMPLES = 400_000
LINE_BATCHES = 8
LINE_SEED_STRIDE = 1_000_003


@dataclass(frozen=True, eq=False)
class Scene:
    segments3d: np.ndarray  # (N, 2, 3) endpoints in scene units
    seed: int
    bounds: Tuple[Tuple[float, float, float], Tuple[float, float, float]] = DEFAULT_BOUNDS

    def __len__(self) -> int:
        return int(len(self.segments3d))


@dataclass(frozen=True, eq=False)
class GtSegment:
    line_id: int
    geo: GeodesicSegment
    length_px: float


@dataclass(frozen=True, eq=False)
class RenderOutput:
    image: np.ndarray
    gt: List[GtSegment] = field(default_factory=list)

    @property
    def gt_segments(self) -> List[GeodesicSegment]:
        return [g.geo for g in self.gt]

    @property
    def gt_circles(self) -> List[GreatCircle]:
        return [g.geo.circle for g in self.gt]

    @property
    def ids(self) -> List[int]:
        return [g.line_id for g in self.gt]


def _segment_min_range(a: np.ndarray, b: np.ndarray) -> float:
    """Distance from the origin to the closest point of segment ``ab``."""
    d = b - a
    s = float(np.clip(-(a @ d) / (d @ d), 0.0, 1.0))
    return float(np.linalg.norm(a + s * d))


def gen_scene(
    seed: int,
    n_lines: int,
    bounds: Tuple[Sequence[float], Sequence[float]] = DEFAULT_BOUNDS,
    min_range: float = MIN_RANGE,
) -> Scene:
    """Random segments with uniform directions and lengths in [0.5, 3]."""
    if n_lines < 1:
        raise InvalidParameter(f"n_lines must be >= 1, got {n_lines}")
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    if np.any(hi - lo <= LENGTH_RANGE[0]):
        raise InvalidParameter("scene bounds are too small for the segment lengths")
    rng = np.random.default_rng(seed)
    segments = []
    while len(segments) < n_lines:
        mid = rng.uniform(lo, hi)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        length = rng.uniform(*LENGTH_RANGE)
        a = mid - 0.5 * length * direction
        b = mid + 0.5 * length * direction
        if np.any(np.minimum(a, b) < lo) or np.any(np.maximum(a, b) > hi):
            continue
        if _segment_min_range(a, b) < min_range:
            continue
        segments.append((a, b))
    return Scene(np.asarray(segments), seed, (tuple(lo), tuple(hi)))  # type: ignore[arg-type]


def _arc_samples(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """``n`` bearings along the shorter arc from unit ``a`` to unit ``b``."""
    omega = math.acos(float(np.clip(a @ b, -1.0, 1.0)))
    t = np.linspace(0.0, 1.0, n)[:, None]
    if omega < 1e-12:
        return np.repeat(a[None, :], n, axis=0)
    pts = (np.sin((1.0 - t) * omega) * a + np.sin(t * omega) * b) / math.sin(omega)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _arc_at(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    omega = math.acos(float(np.clip(a @ b, -1.0, 1.0)))
    p = (math.sin((1.0 - t) * omega) * a + math.sin(t * omega) * b) / math.sin(omega)
    return p / np.linalg.norm(p)


def _visible(model: CameraModel, bearings: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pixels, ok = model.project_many(bearings)
    return pixels, ok & model.in_image(pixels)


def _sample_arc(model: CameraModel, a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Adaptive samples with image steps of at most half a pixel between visible neighbours."""
    omega = math.acos(float(np.clip(a @ b, -1.0, 1.0)))
    n = max(64, int(math.ceil(omega / 2e-3)))
    for _ in range(4):
        t = np.linspace(0.0, 1.0, n)
        bearings = _arc_samples(a, b, n)
        pixels, vis = _visible(model, bearings)
        both = vis[1:] & vis[:-1]
        steps = model.pixel_distance(pixels[1:], pixels[:-1])
        worst = float(np.max(steps[both])) if np.any(both) else 0.0
        if worst <= MAX_STEP_PX or n >= MAX_SAMPLES:
            return t, bearings, vis
        n = min(MAX_SAMPLES, int(n * math.ceil(worst / MAX_STEP_PX)) + 1)
    return t, bearings, vis


def _bisect_edge(model: CameraModel, a: np.ndarray, b: np.ndarray, t_in: float, t_out: float) -> float:
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (t_in + t_out)
        _, vis = _visible(model, _arc_at(a, b, mid)[None, :])
        if vis[0]:
            t_in = mid
        else:
            t_out = mid
    return t_in


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Inclusive index ranges of consecutive True values."""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    diff = np.diff(padded)
    starts = np.nonzero(diff == 1)[0]
    ends = np.nonzero(diff == -1)[0] - 1
    return list(zip(starts.tolist(), ends.tolist()))


def _split_at_seam(model: CameraModel, pixels: np.ndarray) -> List[np.ndarray]:
    if not model.wraps_horizontally or len(pixels) < 2:
        return [pixels]
    jumps = np.nonzero(np.abs(np.diff(pixels[:, 0])) > model.size[0] / 2.0)[0]
    return [p for p in np.split(pixels, jumps + 1) if len(p) >= 2]


def project_segment(
    model: CameraModel, a_cam: np.ndarray, b_cam: np.ndarray, min_px: float = 0.0
) -> Tuple[List[GeodesicSegment], List[float], List[np.ndarray]]:
    """Visible geodesic pieces of a camera-frame segment, their image lengths and polylines."""
    if np.linalg.norm(a_cam) < 1e-9 or np.linalg.norm(b_cam) < 1e-9:
        return [], [], []
    a = a_cam / np.linalg.norm(a_cam)
    b = b_cam / np.linalg.norm(b_cam)
    normal = np.cross(a, b)
    if np.linalg.norm(normal) < 1e-9:
        return [], [], []
    circle = GreatCircle(normal)
    t, bearings, vis = _sample_arc(model, a, b)
    pixels, _ = model.project_many(bearings)
    pieces, lengths, polylines = [], [], []
    for i0, i1 in _runs(vis):
        t0 = t[i0] if i0 == 0 else _bisect_edge(model, a, b, t[i0], t[i0 - 1])
        t1 = t[i1] if i1 == len(t) - 1 else _bisect_edge(model, a, b, t[i1], t[i1 + 1])
        if t1 - t0 <= 1e-12:
            continue
        p_s = a if i0 == 0 else _arc_at(a, b, t0)
        p_e = b if i1 == len(t) - 1 else _arc_at(a, b, t1)
        run_px = pixels[i0:i1 + 1]
        length = float(np.sum(model.pixel_distance(run_px[1:], run_px[:-1]))) if len(run_px) > 1 else 0.0
        polylines.extend(_split_at_seam(model, run_px))
        if length < min_px:
            continue
        try:
            pieces.append(GeodesicSegment(circle, p_s, p_e))
        except ValueError:
            continue
        lengths.append(length)
    return pieces, lengths, polylines


def render(
    scene: Scene,
    pose: Pose,
    model: CameraModel,
    style: RenderStyle = RenderStyle(),
    noise_seed: Optional[int] = None,
) -> RenderOutput:
    """Draw the scene seen from ``pose`` (camera to world) and compute its visible ground truth."""
    width, height = model.size
    canvas = np.full((height, width), style.background, dtype=np.uint8)
    line_type = cv2.LINE_AA if style.antialias else cv2.LINE_8
    gt: List[GtSegment] = []
    for line_id, (a_w, b_w) in enumerate(scene.segments3d):
        a_cam, b_cam = pose.to_camera(np.stack([a_w, b_w]))
        pieces, lengths, polylines = project_segment(model, a_cam, b_cam, style.min_gt_px)
        for polyline in polylines:
            pts = np.rint(polyline * (1 << DRAW_SHIFT)).astype(np.int32).reshape(-1, 1, 2)
            cv2.polylines(canvas, [pts], False, int(style.line_intensity), style.stroke_width, line_type, DRAW_SHIFT)
        gt.extend(GtSegment(line_id, geo, length) for geo, length in zip(pieces, lengths))
    image = canvas
    if style.noise_sigma > 0:
        rng = np.random.default_rng(scene.seed if noise_seed is None else noise_seed)
        noisy = canvas.astype(float) + rng.normal(0.0, style.noise_sigma, size=canvas.shape)
        image = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    _, valid = pixel_bearings(model)
    image = np.where(valid, image, np.uint8(style.outside_value)).astype(np.uint8)
    logger.debug("render: %d scene lines -> %d ground-truth segments", len(scene), len(gt))
    return RenderOutput(image=image, gt=gt)


def single_line_scene(a: Sequence[float], b: Sequence[float], seed: int = 0) -> Scene:
    pts = np.asarray([a, b], dtype=float)
    span = float(np.max(np.abs(pts))) + 1.0
    return Scene(pts[None, :, :], seed, ((-span,) * 3, (span,) * 3))  # type: ignore[arg-type]


@dataclass(frozen=True, eq=False)
class SyntheticProblem:
    """A perturbed bundle-adjustment problem and the exact state it was built from."""

    problem: BaProblem
    truth: BaProblem
    scene_scale: float
    outliers: Tuple[int, ...] = ()


def _rotate_bearing(b: np.ndarray, angle: float, rng: np.random.Generator) -> np.ndarray:
    axis = np.cross(b, rng.normal(size=3))
    axis /= np.linalg.norm(axis)
    return Rotation.from_rotvec(angle * axis).apply(b)


def make_ba_problem(
    seed: int,
    n_poses: int = 5,
    n_points: int = 100,
    n_lines: int = 30,
    perturb: float = 0.05,
    outlier_frac: float = 0.0,
    outlier_deg: float = 10.0,
    bounds: Tuple[Sequence[float], Sequence[float]] = DEFAULT_BOUNDS,
) -> SyntheticProblem:
    """Noise-free multi-view point and line problem, then perturbed away from the truth.

    Pose 0 is fully fixed and pose 1 keeps its ``tx`` fixed, which removes the
    gauge freedom including scale. ``perturb`` is relative: poses move by that
    fraction of the camera spacing, inverse distances and line angles by that
    fraction of their value.
    """
    if n_poses < 2:
        raise InvalidParameter(f"n_poses must be >= 2, got {n_poses}")
    rng = np.random.default_rng(seed)
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    scale = float(np.max(hi - lo))

    poses = [Pose.identity()]
    for i in range(1, n_poses):
        centre = np.array([1.0 * i, 0.3 * math.sin(i), 0.2 * math.cos(i) - 0.2])
        poses.append(Pose.from_rotvec(rng.normal(scale=0.1, size=3), centre))
    centres = np.array([p.t for p in poses])

    world_points = []
    while len(world_points) < n_points:
        x = rng.uniform(lo, hi)
        if np.min(np.linalg.norm(centres - x, axis=1)) >= MIN_RANGE:
            world_points.append(x)

    world_lines = []
    for batch in range(LINE_BATCHES):
        # later batches use derived seeds so the first one matches a plain gen_scene(seed)
        scene = gen_scene(seed + LINE_SEED_STRIDE * batch, 4 * n_lines, bounds)
        for a, b in scene.segments3d:
            line = PluckerLine.from_points(a, b)
            if line.distance < 0.5 * MIN_RANGE:
                continue
            if any(transform_line(p.inverse(), line).distance < 0.5 * MIN_RANGE for p in poses):
                continue
            world_lines.append((line, a, b))
            if len(world_lines) == n_lines:
                break
        if len(world_lines) == n_lines:
            break
    if len(world_lines) < n_lines:
        raise InvalidParameter(
            f"only {len(world_lines)} of {n_lines} lines keep clear of every camera after {LINE_BATCHES} batches"
        )

    points = []
    point_obs = []
    for k, x in enumerate(world_points):
        host = int(rng.integers(n_poses))
        x_h = poses[host].to_camera(x)
        points.append(PointFeature(host, x_h, 1.0 / float(np.linalg.norm(x_h))))
        for i, pose in enumerate(poses):
            point_obs.append(PointObservation(i, k, pose.to_camera(x)))
    lines = []
    line_obs = []
    for j, (line, a, b) in enumerate(world_lines):
        lines.append(plucker_to_orthonormal(line))
        for i, pose in enumerate(poses):
            a_c, b_c = pose.to_camera(np.stack([a, b]))
            line_obs.append(LineMeasurement(j, LineObservation(i, a_c, b_c)))

    fixed = np.zeros((n_poses, 6), dtype=bool)
    fixed[0] = True
    fixed[1, 3] = True
    truth = BaProblem(poses, points, lines, point_obs, line_obs, fixed, gt_poses=list(poses))

    outliers: List[int] = []
    if outlier_frac > 0:
        count = int(round(outlier_frac * len(point_obs)))
        outliers = sorted(int(i) for i in rng.choice(len(point_obs), size=count, replace=False))
        noisy = list(point_obs)
        for idx in outliers:
            obs = noisy[idx]
            bent = _rotate_bearing(obs.bearing, math.radians(outlier_deg), rng)
            noisy[idx] = PointObservation(obs.frame_id, obs.point_id, bent)
        point_obs = noisy

    moved_poses = []
    for i, pose in enumerate(poses):
        if fixed[i].all():
            moved_poses.append(pose)
            continue
        dtheta = rng.normal(scale=perturb * 0.2, size=3)
        dt = rng.normal(scale=perturb, size=3)
        dt[fixed[i, 3:]] = 0.0
        moved_poses.append(pose.retract(dtheta, dt))
    moved_points = [
        PointFeature(p.host_frame, p.host_bearing, p.lam * (1.0 + perturb * float(rng.uniform(-1, 1))))
        for p in points
    ]
    moved_lines = [
        OrthonormalLine(
            line.psi + rng.normal(scale=perturb * 0.2, size=3),
            line.phi * (1.0 + perturb * float(rng.uniform(-1, 1))),
        )
        for line in lines
    ]
    problem = BaProblem(moved_poses, moved_points, moved_lines, point_obs, line_obs, fixed, gt_poses=list(poses))
    return SyntheticProblem(problem, truth, scale, tuple(outliers))


__all__ = [
    "DEFAULT_BOUNDS",
    "GtSegment",
    "RenderOutput",
    "Scene",
    "SyntheticProblem",
    "gen_scene",
    "make_ba_problem",
    "project_segment",
    "render",
    "single_line_scene",
]
