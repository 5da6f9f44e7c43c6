"""Omnidirectional curve segment detection.

Edge drawing on the distorted image: anchors are local gradient maxima, edges
are walked pixel by pixel along the strongest of three forward neighbours, and
each walked chain is cut into geodesic segments by fitting great circles to
the unprojected pixels while the walk proceeds. The fit is checked in pixel
units (distance from the pixel to the projected circle), so straight 3D edges
survive arbitrary lens distortion, including the part of the field of view
behind the image plane.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import cv2
import numpy as np

from ..config import DetectorParams
from ..errors import EmptyImage, GeosegError, ImageTooSmall
from ..geometry.camera import CameraModel, pixel_bearings
from ..geometry.sphere import (
    GeodesicSegment,
    GreatCircle,
    fit_great_circle,
    nearest_on_circle,
    pixel_to_curve_distance_many,
)

logger = logging.getLogger(__name__)

LEFT = (-1, 0)
RIGHT = (1, 0)
UP = (0, -1)
DOWN = (0, 1)

INVALID_MARGIN_PX = 3
GAUSSIAN_KSIZE = 5
MAX_ARC_RAD = math.pi - 1e-6


@dataclass(frozen=True, eq=False)
class GradientMap:
    magnitude: np.ndarray
    vertical: np.ndarray  # True where |Gx| >= |Gy|: the edge runs vertically

    @property
    def shape(self) -> Tuple[int, int]:
        return self.magnitude.shape  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class CurveSegment:
    chain: np.ndarray  # (N, 2) integer pixels as (x, y), walk order
    geo: GeodesicSegment
    avg_fit_px: float

    @property
    def n_px(self) -> int:
        return int(len(self.chain))

    @property
    def start_px(self) -> np.ndarray:
        return self.chain[0].astype(float)

    @property
    def end_px(self) -> np.ndarray:
        return self.chain[-1].astype(float)


@dataclass
class DetectionStats:
    timings_ms: Dict[str, float] = field(default_factory=dict)
    n_anchors: int = 0
    n_chains: int = 0
    n_segments: int = 0

    def summary(self) -> str:
        parts = ", ".join(f"{k} {v:.1f} ms" for k, v in self.timings_ms.items())
        return f"{self.n_segments} segments from {self.n_anchors} anchors / {self.n_chains} chains ({parts})"


def _as_gray(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img)
    if arr.size == 0:
        raise EmptyImage("image has no pixels")
    if arr.ndim != 2:
        raise ValueError(f"expected a single-channel image, got shape {arr.shape}")
    return arr.astype(np.uint8, copy=False)


def equalize_histogram(img: np.ndarray) -> np.ndarray:
    """Global equalization, ``lut[v] = floor(255 * cdf(v))``; one-level images pass through."""
    gray = _as_gray(img)
    hist = np.bincount(gray.ravel(), minlength=256)
    if np.count_nonzero(hist) <= 1:
        return gray.copy()
    cdf = np.cumsum(hist) / gray.size
    lut = np.floor(255.0 * cdf).astype(np.uint8)
    return lut[gray]


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    smoothed = cv2.GaussianBlur(
        np.asarray(img, dtype=np.float32), (GAUSSIAN_KSIZE, GAUSSIAN_KSIZE), sigma,
        borderType=cv2.BORDER_REPLICATE,
    )
    return np.clip(np.rint(smoothed), 0, 255).astype(np.uint8)


def preprocess(img: np.ndarray, params: DetectorParams = DetectorParams()) -> np.ndarray:
    return gaussian_blur(equalize_histogram(img), params.gaussian_sigma)


def gradients(img: np.ndarray, params: DetectorParams = DetectorParams()) -> GradientMap:
    gray = _as_gray(img)
    if gray.shape[0] < 3 or gray.shape[1] < 3:
        raise ImageTooSmall(f"gradients need at least 3x3 pixels, got {gray.shape[1]}x{gray.shape[0]}")
    src = gray.astype(np.float32)
    gx = cv2.Sobel(src, cv2.CV_32F, 1, 0, ksize=3, borderType=cv2.BORDER_REPLICATE)
    gy = cv2.Sobel(src, cv2.CV_32F, 0, 1, ksize=3, borderType=cv2.BORDER_REPLICATE)
    ax, ay = np.abs(gx), np.abs(gy)
    magnitude = np.clip(ax + ay, 0, np.iinfo(np.uint16).max).astype(np.uint16)
    magnitude[magnitude < params.t_gradient_min] = 0
    return GradientMap(magnitude=magnitude, vertical=ax >= ay)


def extract_anchors(gm: GradientMap, params: DetectorParams = DetectorParams()) -> np.ndarray:
    """Anchor pixels ``(x, y)``, strongest first, ties in row-major order."""
    G = gm.magnitude.astype(np.int32)
    height, width = G.shape
    if height < 3 or width < 3:
        return np.zeros((0, 2), dtype=np.int32)
    rows = np.arange(1, height - 1, params.anchor_scan_stride)
    core = G[rows, 1:-1]
    left, right = G[rows, :-2], G[rows, 2:]
    up, down = G[rows - 1, 1:-1], G[rows + 1, 1:-1]
    vertical = gm.vertical[rows, 1:-1]
    t = params.t_anchor
    beats_lr = (core - left >= t) & (core - right >= t)
    beats_ud = (core - up >= t) & (core - down >= t)
    is_anchor = (core > 0) & np.where(vertical, beats_lr, beats_ud)
    ri, ci = np.nonzero(is_anchor)
    ys = rows[ri]
    xs = ci + 1
    mags = G[ys, xs]
    order = np.lexsort((ys * width + xs, -mags))
    return np.stack([xs[order], ys[order]], axis=1).astype(np.int32)


def support_mask(valid: np.ndarray) -> np.ndarray:
    """Pixels whose filter neighbourhood lies entirely inside the valid domain."""
    size = 2 * INVALID_MARGIN_PX + 1
    invalid = cv2.dilate((~valid).astype(np.uint8), np.ones((size, size), np.uint8), borderType=cv2.BORDER_CONSTANT, borderValue=0)
    return invalid == 0


class CurveWalker:
    """Walks edge chains from anchors and cuts them into fitted geodesic segments."""

    def __init__(self, G: np.ndarray, vertical: np.ndarray, bearings: np.ndarray, model: CameraModel, params: DetectorParams):
        self.G = G
        self.vertical = vertical
        self.bearings = bearings
        self.model = model
        self.params = params
        self.height, self.width = G.shape
        self.visited = np.zeros(G.shape, dtype=bool)

    # walking ---------------------------------------------------------------
    def _candidates(self, x: int, y: int, step: Tuple[int, int]) -> List[Tuple[int, int]]:
        dx, dy = step
        if dx != 0:
            cands = [(x + dx, y - 1), (x + dx, y), (x + dx, y + 1)]
        else:
            cands = [(x - 1, y + dy), (x, y + dy), (x + 1, y + dy)]
        return [(cx, cy) for cx, cy in cands if 0 <= cx < self.width and 0 <= cy < self.height]

    def _trace(self, x: int, y: int, step: Tuple[int, int], own: set) -> Tuple[List[Tuple[int, int]], List[bool]]:
        path: List[Tuple[int, int]] = []
        crossing: List[bool] = []
        run = 0
        while True:
            best, best_g = None, 0
            for cand in self._candidates(x, y, step):
                g = int(self.G[cand[1], cand[0]])
                if cand in own or g <= best_g:
                    continue
                best, best_g = cand, g
            if best is None:
                break
            nx, ny = best
            claimed = bool(self.visited[ny, nx])
            run = run + 1 if claimed else 0
            if run > self.params.t_outliers:
                break
            own.add(best)
            path.append(best)
            crossing.append(claimed)
            if self.vertical[ny, nx]:
                if step[1] == 0:
                    step = DOWN if ny > y else UP if ny < y else self._turn(nx, ny, (UP, DOWN), own)
            elif step[0] == 0:
                step = RIGHT if nx > x else LEFT if nx < x else self._turn(nx, ny, (LEFT, RIGHT), own)
            x, y = nx, ny
        while crossing and crossing[-1]:
            path.pop()
            crossing.pop()
        return path, crossing

    def _turn(self, x: int, y: int, options: Tuple[Tuple[int, int], Tuple[int, int]], own: set) -> Tuple[int, int]:
        scores = []
        for step in options:
            free = [int(self.G[cy, cx]) for cx, cy in self._candidates(x, y, step) if (cx, cy) not in own]
            scores.append(max(free, default=0))
        return options[1] if scores[1] > scores[0] else options[0]

    def walk(self, x: int, y: int) -> Tuple[np.ndarray, np.ndarray]:
        """Pixels ``(x, y)`` through the anchor in walk order and their crossing flags."""
        own = {(x, y)}
        first, second = (UP, DOWN) if self.vertical[y, x] else (LEFT, RIGHT)
        back, back_cross = self._trace(x, y, first, own)
        fwd, fwd_cross = self._trace(x, y, second, own)
        pixels = back[::-1] + [(x, y)] + fwd
        flags = back_cross[::-1] + [False] + fwd_cross
        return np.asarray(pixels, dtype=np.int32).reshape(-1, 2), np.asarray(flags, dtype=bool)

    # fitting ---------------------------------------------------------------
    def _distances(self, pixels: np.ndarray, circle: GreatCircle) -> np.ndarray:
        bearings = self.bearings[pixels[:, 1], pixels[:, 0]]
        return pixel_to_curve_distance_many(self.model, pixels.astype(float), bearings, circle)

    def _fit(self, pixels: np.ndarray) -> Optional[GreatCircle]:
        try:
            return fit_great_circle(self.bearings[pixels[:, 1], pixels[:, 0]]).circle
        except GeosegError:
            return None

    def segment_chain(self, pixels: np.ndarray, crossing: np.ndarray) -> List[CurveSegment]:
        p = self.params
        segments: List[CurveSegment] = []
        n = len(pixels)
        i = 0
        while i + p.min_fit_len <= n:
            window = np.arange(i, i + p.min_fit_len)
            if crossing[window].any():
                i = int(window[crossing[window]][-1]) + 1
                continue
            circle = self._fit(pixels[window])
            if circle is None or np.max(self._distances(pixels[window], circle)) > p.t_fit_px:
                i += 1
                continue
            accepted = list(window)
            j = int(window[-1]) + 1
            base = j
            dists = self._distances(pixels[j:], circle) if j < n else np.zeros(0)
            outliers = 0
            since_refit = 0
            while j < n:
                if crossing[j] or dists[j - base] > p.t_fit_px:
                    outliers += 1
                    if outliers > p.t_outliers:
                        break
                else:
                    accepted.append(j)
                    outliers = 0
                    since_refit += 1
                    if since_refit >= p.refit_interval:
                        refit = self._fit(pixels[accepted])
                        if refit is not None:
                            circle = refit
                        base = j + 1
                        dists = self._distances(pixels[base:], circle) if base < n else np.zeros(0)
                        since_refit = 0
                j += 1
            segments.extend(self._close(pixels[accepted]))
            i = accepted[-1] + 1
        return segments

    def _close(self, chain: np.ndarray) -> List[CurveSegment]:
        p = self.params
        if len(chain) < p.min_segment_len_px:
            return []
        circle = self._fit(chain)
        if circle is None:
            return []
        bearings = self.bearings[chain[:, 1], chain[:, 0]]
        # cumulative arc along the chain; long chains are cut so every piece stays a shorter arc
        steps = np.arccos(np.clip(np.sum(bearings[1:] * bearings[:-1], axis=1), -1.0, 1.0))
        along = np.concatenate([[0.0], np.cumsum(steps)])
        if along[-1] < MAX_ARC_RAD:
            pieces = [chain]
        else:
            cuts = np.floor(along / (math.pi / 2.0)).astype(int)
            pieces = [chain[cuts == c] for c in np.unique(cuts)]
        out = []
        for piece in pieces:
            if len(piece) < p.min_segment_len_px:
                continue
            seg = self._make_segment(piece, circle if len(pieces) == 1 else self._fit(piece))
            if seg is not None:
                out.append(seg)
        return out

    def _make_segment(self, chain: np.ndarray, circle: Optional[GreatCircle]) -> Optional[CurveSegment]:
        if circle is None:
            return None
        dists = self._distances(chain, circle)
        avg = float(np.mean(dists))
        if not np.isfinite(avg) or avg > self.params.t_fit_px:
            return None
        try:
            p_s = nearest_on_circle(self.bearings[chain[0, 1], chain[0, 0]], circle)
            p_e = nearest_on_circle(self.bearings[chain[-1, 1], chain[-1, 0]], circle)
            geo = GeodesicSegment(circle, p_s, p_e)
        except GeosegError:
            return None
        return CurveSegment(chain=chain.copy(), geo=geo, avg_fit_px=avg)

    def run(self, anchors: np.ndarray, stats: DetectionStats) -> List[CurveSegment]:
        segments: List[CurveSegment] = []
        for x, y in anchors:
            x, y = int(x), int(y)
            if self.visited[y, x] or self.G[y, x] == 0:
                continue
            pixels, crossing = self.walk(x, y)
            stats.n_chains += 1
            segments.extend(self.segment_chain(pixels, crossing))
            fresh = pixels[~crossing]
            self.visited[fresh[:, 1], fresh[:, 0]] = True
        return segments


def _timed(stats: DetectionStats, name: str, start: float) -> float:
    now = time.perf_counter()
    stats.timings_ms[name] = (now - start) * 1000.0
    return now


def detect_with_stats(
    img: np.ndarray, model: CameraModel, params: DetectorParams = DetectorParams()
) -> Tuple[List[CurveSegment], DetectionStats]:
    gray = _as_gray(img)
    width, height = model.size
    if gray.shape != (height, width):
        raise ValueError(f"image is {gray.shape[1]}x{gray.shape[0]} but the camera expects {width}x{height}")
    stats = DetectionStats()
    t0 = time.perf_counter()
    smoothed = preprocess(gray, params)
    t0 = _timed(stats, "preprocess", t0)
    gm = gradients(smoothed, params)
    bearings, valid = pixel_bearings(model)
    G = gm.magnitude.copy()
    G[~support_mask(valid)] = 0
    G[0, :] = G[-1, :] = 0
    G[:, 0] = G[:, -1] = 0
    t0 = _timed(stats, "gradients", t0)
    anchors = extract_anchors(GradientMap(G, gm.vertical), params)
    stats.n_anchors = len(anchors)
    t0 = _timed(stats, "anchors", t0)
    walker = CurveWalker(G, gm.vertical, bearings, model, params)
    segments = walker.run(anchors, stats)
    stats.n_segments = len(segments)
    _timed(stats, "walk", t0)
    logger.debug("detect: %s", stats.summary())
    return segments, stats


def detect(img: np.ndarray, model: CameraModel, params: DetectorParams = DetectorParams()) -> List[CurveSegment]:
    segments, _ = detect_with_stats(img, model, params)
    return segments


__all__ = [
    "CurveSegment",
    "CurveWalker",
    "DetectionStats",
    "GradientMap",
    "detect",
    "detect_with_stats",
    "equalize_histogram",
    "extract_anchors",
    "gaussian_blur",
    "gradients",
    "preprocess",
    "support_mask",
]
