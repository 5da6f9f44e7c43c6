"""Great circles and geodesic segments on the unit sphere."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy import linalg
from scipy.spatial.transform import Rotation

from ..errors import (
    BearingOutOfFov,
    DegenerateInput,
    NearestOutOfFov,
    PoleSingularity,
    ProjectionSingularity,
)
from .camera import CameraModel

ON_CIRCLE_TOL = 1e-6
POLE_EPS = 1e-9
OVERLAP_MAX_TILT_RAD = math.radians(45.0)


def canonical_normal(k: np.ndarray) -> np.ndarray:
    """Unit normal with its largest-magnitude component made positive."""
    k = np.asarray(k, dtype=float)
    k = k / np.linalg.norm(k)
    idx = int(np.argmax(np.abs(k)))
    return -k if k[idx] < 0 else k


@dataclass(frozen=True, eq=False)
class GreatCircle:
    k: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.k, dtype=float).reshape(3)
        norm = float(np.linalg.norm(k))
        if not np.isfinite(norm) or norm < POLE_EPS:
            raise DegenerateInput("great circle normal must be a non-zero finite vector")
        object.__setattr__(self, "k", canonical_normal(k))

    def tilt(self, other: "GreatCircle") -> float:
        """Angle between the two circle planes, sign-agnostic, in [0, pi/2]."""
        return math.acos(min(1.0, abs(float(np.dot(self.k, other.k)))))


@dataclass(frozen=True, eq=False)
class GeodesicSegment:
    circle: GreatCircle
    p_start: np.ndarray
    p_end: np.ndarray

    def __post_init__(self) -> None:
        p_s = np.asarray(self.p_start, dtype=float).reshape(3)
        p_e = np.asarray(self.p_end, dtype=float).reshape(3)
        p_s = p_s / np.linalg.norm(p_s)
        p_e = p_e / np.linalg.norm(p_e)
        k = self.circle.k
        if abs(float(np.dot(k, p_s))) > ON_CIRCLE_TOL or abs(float(np.dot(k, p_e))) > ON_CIRCLE_TOL:
            raise DegenerateInput("segment endpoints are not on the circle")
        length = _angle(p_s, p_e)
        if not (0.0 < length < math.pi):
            raise DegenerateInput(f"segment arc length {length:.3e} rad outside (0, pi)")
        object.__setattr__(self, "p_start", p_s)
        object.__setattr__(self, "p_end", p_e)

    @property
    def k(self) -> np.ndarray:
        return self.circle.k

    def reversed(self) -> "GeodesicSegment":
        return GeodesicSegment(self.circle, self.p_end, self.p_start)

    def rotated(self, rotation: np.ndarray) -> "GeodesicSegment":
        R = np.asarray(rotation, dtype=float)
        return GeodesicSegment(GreatCircle(R @ self.circle.k), R @ self.p_start, R @ self.p_end)


@dataclass(frozen=True, eq=False)
class FitResult:
    circle: GreatCircle
    rms_angular_residual: float
    n_points: int


def _angle(a: np.ndarray, b: np.ndarray) -> float:
    return math.acos(max(-1.0, min(1.0, float(np.dot(a, b)))))


def segment_from_endpoints(p_start: np.ndarray, p_end: np.ndarray) -> GeodesicSegment:
    """The shorter arc through two non-parallel bearings."""
    p_s = np.asarray(p_start, dtype=float)
    p_e = np.asarray(p_end, dtype=float)
    k = np.cross(p_s, p_e)
    if np.linalg.norm(k) < POLE_EPS:
        raise DegenerateInput("endpoints are parallel; the great circle is undefined")
    return GeodesicSegment(GreatCircle(k), p_s, p_e)


def fit_great_circle(points: Sequence[np.ndarray]) -> FitResult:
    """Least-squares plane through the origin: smallest right singular vector."""
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(P) < 2:
        raise DegenerateInput(f"need at least 2 points to fit a great circle, got {len(P)}")
    _, s, vt = linalg.svd(P, full_matrices=False)
    if s[1] <= 1e-9 * s[0]:
        raise DegenerateInput("points do not span a plane; the fitted circle is not unique")
    # two bearings: the economy SVD has no third direction, the plane normal is their cross product
    circle = GreatCircle(vt[-1] if len(s) == 3 else np.cross(P[0], P[1]))
    rms = float(np.sqrt(np.mean((P @ circle.k) ** 2)))
    return FitResult(circle=circle, rms_angular_residual=rms, n_points=len(P))


def nearest_on_circle(bearing: np.ndarray, circle: GreatCircle) -> np.ndarray:
    b = np.asarray(bearing, dtype=float).reshape(3)
    v = np.cross(b, circle.k)
    norm = float(np.linalg.norm(v))
    if norm < POLE_EPS:
        raise PoleSingularity("bearing is parallel to the circle normal")
    q = np.cross(circle.k, v / norm)
    return q / np.linalg.norm(q)


def nearest_on_circle_many(bearings: np.ndarray, circle: GreatCircle) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized nearest points; the mask flags bearings away from the poles."""
    b = np.atleast_2d(np.asarray(bearings, dtype=float))
    v = np.cross(b, circle.k)
    norm = np.linalg.norm(v, axis=1)
    ok = norm >= POLE_EPS
    v = v / np.where(ok, norm, 1.0)[:, None]
    q = np.cross(circle.k, v)
    q /= np.where(ok, np.linalg.norm(q, axis=1), 1.0)[:, None]
    return q, ok


def pixel_to_curve_distance(model: CameraModel, pixel: np.ndarray, circle: GreatCircle) -> float:
    p = np.asarray(pixel, dtype=float).reshape(2)
    b = model.unproject(p)
    q = nearest_on_circle(b, circle)
    try:
        projected = model.project(q)
    except (BearingOutOfFov, ProjectionSingularity) as exc:
        raise NearestOutOfFov(f"nearest circle point falls outside the camera domain: {exc}") from exc
    return float(model.pixel_distance(projected, p))


def pixel_to_curve_distance_many(model: CameraModel, pixels: np.ndarray, bearings: np.ndarray, circle: GreatCircle) -> np.ndarray:
    """Distances for pixels whose bearings are already known; undefined entries are +inf."""
    q, ok = nearest_on_circle_many(bearings, circle)
    projected, ok_proj = model.project_many(q)
    dist = model.pixel_distance(projected, pixels)
    return np.where(ok & ok_proj, dist, np.inf)


def arc_length(segment: GeodesicSegment) -> float:
    return _angle(segment.p_start, segment.p_end)


def arc_axis(segment: GeodesicSegment) -> np.ndarray:
    """Rotation axis carrying p_start toward p_end along the arc."""
    axis = np.cross(segment.p_start, segment.p_end)
    return axis / np.linalg.norm(axis)


def point_along(segment: GeodesicSegment, angle: float) -> np.ndarray:
    q = Rotation.from_rotvec(arc_axis(segment) * angle).apply(segment.p_start)
    return q / np.linalg.norm(q)


def sample_segment(segment: GeodesicSegment, n: int) -> np.ndarray:
    """``n`` bearings evenly spaced from p_start to p_end inclusive."""
    n = max(2, int(n))
    angles = np.linspace(0.0, arc_length(segment), n)
    pts = Rotation.from_rotvec(np.outer(angles, arc_axis(segment))).apply(segment.p_start)
    pts[-1] = segment.p_end
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def slice_segment(segment: GeodesicSegment, m_deg: float) -> List[GeodesicSegment]:
    if m_deg <= 0:
        raise ValueError(f"slice angle must be positive, got {m_deg}")
    length = arc_length(segment)
    step = math.radians(m_deg)
    count = max(1, int(math.ceil(length / step - 1e-9)))
    if count == 1:
        return [segment]
    bounds = [point_along(segment, i * step) for i in range(count)]
    bounds[0] = segment.p_start
    bounds.append(segment.p_end)
    return [GeodesicSegment(segment.circle, bounds[i], bounds[i + 1]) for i in range(count)]


def _circle_frame(segment: GeodesicSegment) -> tuple[np.ndarray, np.ndarray]:
    u = segment.p_start
    w = np.cross(arc_axis(segment), u)
    return u, w / np.linalg.norm(w)


def _projected_interval(source: GeodesicSegment, target: GeodesicSegment) -> tuple[float, float] | None:
    ends, ok = nearest_on_circle_many(np.stack([source.p_start, source.p_end]), target.circle)
    if not np.all(ok):
        return None
    u, w = _circle_frame(target)
    t = np.arctan2(ends @ w, ends @ u)
    delta = (t[1] - t[0] + math.pi) % (2.0 * math.pi) - math.pi
    lo = float(min(t[0], t[0] + delta))
    return lo, lo + abs(float(delta))


def _overlap_one_side(source: GeodesicSegment, target: GeodesicSegment) -> float:
    interval = _projected_interval(source, target)
    length = arc_length(target)
    if interval is None or length <= 0:
        return 0.0
    lo, hi = interval
    covered = 0.0
    for shift in (-2.0 * math.pi, 0.0, 2.0 * math.pi):
        covered += max(0.0, min(hi + shift, length) - max(lo + shift, 0.0))
    return min(1.0, covered / length)


def segment_overlap(s1: GeodesicSegment, s2: GeodesicSegment) -> float:
    if s1.circle.tilt(s2.circle) >= OVERLAP_MAX_TILT_RAD:
        return 0.0
    return min(_overlap_one_side(s1, s2), _overlap_one_side(s2, s1))


__all__ = [
    "FitResult",
    "GeodesicSegment",
    "GreatCircle",
    "arc_axis",
    "arc_length",
    "canonical_normal",
    "fit_great_circle",
    "nearest_on_circle",
    "nearest_on_circle_many",
    "pixel_to_curve_distance",
    "pixel_to_curve_distance_many",
    "point_along",
    "sample_segment",
    "segment_from_endpoints",
    "segment_overlap",
    "slice_segment",
]
