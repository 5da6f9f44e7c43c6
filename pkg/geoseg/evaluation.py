"""Segment distances, rotated image pairs and repeatability scoring."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple, Union

import cv2
import numpy as np
from scipy import ndimage
from scipy.spatial.transform import Rotation

from .errors import GeosegError, RotationTooLarge
from .features.detector import CurveSegment
from .geometry.camera import CameraModel, pixel_bearings
from .geometry.sphere import GeodesicSegment, pixel_to_curve_distance, segment_overlap
from .logs import LogFn, emit

logger = logging.getLogger(__name__)

Metric = Literal["orth", "struct"]
SegmentLike = Union[CurveSegment, GeodesicSegment]

OVERLAP_MIN = 0.5
MAX_ROTATION_DEG = 60.0
COVISIBLE_MARGIN_PX = 4
DEFAULT_EPS_PX = 5.0


def _geo(seg: SegmentLike) -> GeodesicSegment:
    return seg.geo if isinstance(seg, CurveSegment) else seg


def _endpoints_px(model: CameraModel, geo: GeodesicSegment) -> Tuple[np.ndarray, np.ndarray]:
    return model.project(geo.p_start), model.project(geo.p_end)


def d_orth(model: CameraModel, s1: SegmentLike, s2: SegmentLike) -> float:
    """Mean endpoint-to-curve pixel distance, symmetrized; +inf below half overlap."""
    g1, g2 = _geo(s1), _geo(s2)
    if segment_overlap(g1, g2) < OVERLAP_MIN:
        return math.inf
    try:
        e1 = _endpoints_px(model, g1)
        e2 = _endpoints_px(model, g2)
        d_a1 = 0.5 * sum(pixel_to_curve_distance(model, p, g2.circle) for p in e1)
        d_a2 = 0.5 * sum(pixel_to_curve_distance(model, p, g1.circle) for p in e2)
    except (GeosegError, ValueError, ArithmeticError):
        return math.inf
    return 0.5 * (d_a1 + d_a2)


def d_struct(model: CameraModel, s1: SegmentLike, s2: SegmentLike) -> float:
    """Mean endpoint distance under the better of the two endpoint pairings."""
    try:
        a1, a2 = _endpoints_px(model, _geo(s1))
        b1, b2 = _endpoints_px(model, _geo(s2))
    except (GeosegError, ValueError, ArithmeticError):
        return math.inf
    dist = model.pixel_distance
    straight = 0.5 * (float(dist(a1, b1)) + float(dist(a2, b2)))
    crossed = 0.5 * (float(dist(a1, b2)) + float(dist(a2, b1)))
    return min(straight, crossed)


def segment_distance(model: CameraModel, s1: SegmentLike, s2: SegmentLike, metric: Metric) -> float:
    if metric == "orth":
        return d_orth(model, s1, s2)
    if metric == "struct":
        return d_struct(model, s1, s2)
    raise ValueError(f"unknown metric {metric!r}; expected 'orth' or 'struct'")


@dataclass(frozen=True, eq=False)
class Transport:
    """Bearing map between the two frames of a pair: ``b_b = R @ b_a``."""

    R: np.ndarray

    def apply(self, seg: SegmentLike) -> GeodesicSegment:
        return _geo(seg).rotated(self.R)

    def inverse(self) -> "Transport":
        return Transport(self.R.T)

    def __call__(self, bearing: np.ndarray) -> np.ndarray:
        return self.R @ np.asarray(bearing, dtype=float)


@dataclass(frozen=True, eq=False)
class RotatedPair:
    image: np.ndarray
    transport: Transport
    mask_a: np.ndarray
    mask_b: np.ndarray


def rotation_angle_deg(R: np.ndarray) -> float:
    return math.degrees(float(np.linalg.norm(Rotation.from_matrix(R).as_rotvec())))


def _erode(mask: np.ndarray, margin: int) -> np.ndarray:
    if margin <= 0:
        return mask.copy()
    size = 2 * margin + 1
    kernel = np.ones((size, size), np.uint8)
    return cv2.erode(mask.astype(np.uint8), kernel, borderType=cv2.BORDER_CONSTANT, borderValue=0).astype(bool)


def make_rotated_pair(
    img: np.ndarray,
    model: CameraModel,
    R: np.ndarray,
    max_rotation_deg: Optional[float] = None,
    outside_value: int = 0,
    margin_px: int = COVISIBLE_MARGIN_PX,
) -> RotatedPair:
    """Resample ``img`` as seen by the same camera rotated so that ``b_b = R b_a``."""
    R = np.asarray(R, dtype=float)
    limit = max_rotation_deg
    if limit is None and not model.wraps_horizontally:
        limit = MAX_ROTATION_DEG
    angle = rotation_angle_deg(R)
    if limit is not None and angle > limit + 1e-9:
        raise RotationTooLarge(f"rotation of {angle:.2f} deg exceeds the {limit:.0f} deg limit for {model.kind} cameras")
    bearings, valid = pixel_bearings(model)
    height, width = valid.shape
    src = np.asarray(img)
    if np.array_equal(R, np.eye(3)):
        warped = src.copy()
        pre_ok = valid.copy()
    else:
        pre, ok = model.project_many(bearings.reshape(-1, 3) @ R)
        pre_ok = (ok & model.in_image(pre)).reshape(height, width) & valid
        mode = "grid-wrap" if model.wraps_horizontally else "nearest"
        sampled = ndimage.map_coordinates(
            src.astype(np.float64), [pre[:, 1], pre[:, 0]], order=1, mode=mode, prefilter=False
        ).reshape(height, width)
        warped = np.clip(np.rint(sampled), 0, 255).astype(np.uint8)
    warped = np.where(pre_ok, warped, np.uint8(outside_value)).astype(np.uint8)
    fwd, ok_fwd = model.project_many(bearings.reshape(-1, 3) @ R.T)
    lands = (ok_fwd & model.in_image(fwd)).reshape(height, width) & valid
    if lands.any():
        xi = np.clip(np.rint(fwd[:, 0]).astype(int) % width, 0, width - 1)
        yi = np.clip(np.rint(fwd[:, 1]).astype(int), 0, height - 1)
        lands &= valid[yi, xi].reshape(height, width)
    return RotatedPair(
        image=warped,
        transport=Transport(R),
        mask_a=_erode(lands, margin_px),
        mask_b=_erode(pre_ok, margin_px),
    )


@dataclass
class PairResult:
    rep: float
    le: Optional[float]
    n_detected_a: int
    n_detected_b: int
    metric: str
    epsilon: float
    n_matched: int = 0
    empty_side: bool = False
    distances: List[float] = field(default_factory=list, repr=False)


def _inside(model: CameraModel, mask: Optional[np.ndarray], geo: GeodesicSegment) -> bool:
    if mask is None:
        return True
    try:
        ends = _endpoints_px(model, geo)
    except (GeosegError, ValueError, ArithmeticError):
        return False
    height, width = mask.shape
    for p in ends:
        x = int(round(float(p[0]))) % width if model.wraps_horizontally else int(round(float(p[0])))
        y = int(round(float(p[1])))
        if not (0 <= x < width and 0 <= y < height) or not mask[y, x]:
            return False
    return True


def _one_way(
    source: Sequence[SegmentLike],
    target: Sequence[SegmentLike],
    transport: Transport,
    model: CameraModel,
    eps_px: float,
    metric: Metric,
    source_mask: Optional[np.ndarray],
) -> Tuple[int, List[float]]:
    """Counted source segments and the distances of their greedy one-to-one matches."""
    moved = []
    for seg in source:
        geo = _geo(seg)
        if not _inside(model, source_mask, geo):
            continue
        try:
            moved.append(transport.apply(geo))
        except (GeosegError, ValueError):
            continue
    candidates = []
    for i, geo in enumerate(moved):
        for j, other in enumerate(target):
            dist = segment_distance(model, geo, other, metric)
            if dist <= eps_px:
                candidates.append((dist, i, j))
    candidates.sort()
    used_i, used_j = set(), set()
    matched: List[float] = []
    for dist, i, j in candidates:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        matched.append(dist)
    return len(moved), matched


def _pair_scores(
    dets_a: Sequence[SegmentLike],
    dets_b: Sequence[SegmentLike],
    transport: Transport,
    model: CameraModel,
    eps_px: float,
    metric: Metric,
    masks: Optional[Tuple[np.ndarray, np.ndarray]],
) -> PairResult:
    if eps_px <= 0:
        raise ValueError(f"eps_px must be positive, got {eps_px}")
    mask_a, mask_b = masks if masks is not None else (None, None)
    n_a, dist_ab = _one_way(dets_a, dets_b, transport, model, eps_px, metric, mask_a)
    n_b, dist_ba = _one_way(dets_b, dets_a, transport.inverse(), model, eps_px, metric, mask_b)
    empty = n_a == 0 or n_b == 0
    rep_a = len(dist_ab) / n_a if n_a else 0.0
    rep_b = len(dist_ba) / n_b if n_b else 0.0
    distances = dist_ab + dist_ba
    return PairResult(
        rep=0.5 * (rep_a + rep_b),
        le=float(np.mean(distances)) if distances else None,
        n_detected_a=len(dets_a),
        n_detected_b=len(dets_b),
        metric=metric,
        epsilon=eps_px,
        n_matched=len(distances),
        empty_side=empty,
        distances=distances,
    )


def repeatability(
    dets_a: Sequence[SegmentLike],
    dets_b: Sequence[SegmentLike],
    transport: Transport,
    model: CameraModel,
    eps_px: float = DEFAULT_EPS_PX,
    metric: Metric = "orth",
    masks: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> PairResult:
    return _pair_scores(dets_a, dets_b, transport, model, eps_px, metric, masks)


def localization_error(
    dets_a: Sequence[SegmentLike],
    dets_b: Sequence[SegmentLike],
    transport: Transport,
    model: CameraModel,
    eps_px: float = DEFAULT_EPS_PX,
    metric: Metric = "orth",
    masks: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Optional[float]:
    return _pair_scores(dets_a, dets_b, transport, model, eps_px, metric, masks).le


def match_precision(
    matches: Sequence[Tuple[int, int, float]],
    dets_a: Sequence[SegmentLike],
    dets_b: Sequence[SegmentLike],
    transport: Transport,
    model: CameraModel,
    eps_px: float = DEFAULT_EPS_PX,
) -> Optional[float]:
    """Share of descriptor matches whose transported segment lies within ``eps_px`` (d_orth)."""
    if not matches:
        return None
    correct = sum(1 for ia, ib, _ in matches if d_orth(model, transport.apply(dets_a[ia]), dets_b[ib]) < eps_px)
    return correct / len(matches)


def gt_recall(
    model: CameraModel,
    detections: Sequence[SegmentLike],
    gt: Sequence[GeodesicSegment],
    eps_px: float = DEFAULT_EPS_PX,
) -> float:
    """Share of ground-truth segments with some detection within ``eps_px`` (d_orth)."""
    if not gt:
        return 1.0
    found = sum(1 for g in gt if any(d_orth(model, det, g) < eps_px for det in detections))
    return found / len(gt)


def evaluate_pair(
    img_a: np.ndarray,
    img_b: np.ndarray,
    model: CameraModel,
    R: np.ndarray,
    detect_fn,
    eps_px: float = DEFAULT_EPS_PX,
    metric: Metric = "orth",
    masks: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    log: LogFn = None,
) -> PairResult:
    dets_a = detect_fn(img_a)
    dets_b = detect_fn(img_b)
    result = repeatability(dets_a, dets_b, Transport(np.asarray(R, dtype=float)), model, eps_px, metric, masks)
    le = "n/a" if result.le is None else f"{result.le:.3f}"
    emit(log, f"[info] pair: {len(dets_a)}/{len(dets_b)} segments, rep {result.rep:.3f}, le {le}")
    return result


__all__ = [
    "DEFAULT_EPS_PX",
    "PairResult",
    "RotatedPair",
    "Transport",
    "d_orth",
    "d_struct",
    "evaluate_pair",
    "gt_recall",
    "localization_error",
    "make_rotated_pair",
    "match_precision",
    "repeatability",
    "rotation_angle_deg",
    "segment_distance",
]
