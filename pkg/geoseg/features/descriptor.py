"""Binary band descriptors for curve segments and their matching.

A curve segment is cut into equal-angle slices; each slice is locally straight
in the image, so it gets a classic line-band descriptor computed on its image
chord. The per-slice 72-dim band statistics are binarized with a fixed table
of random comparison pairs into 256 bits. A segment descriptor is the ordered
list of its slice descriptors; two lists are compared by sliding one against
the other (in both directions) and taking the best mean Hamming fraction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import cv2
import numpy as np
from scipy import ndimage

from ..config import MatchParams
from ..errors import BearingOutOfFov, ProjectionSingularity, SliceOutsideImage
from ..geometry.camera import CameraModel
from ..geometry.sphere import GeodesicSegment, slice_segment
from .detector import CurveSegment

logger = logging.getLogger(__name__)

N_BITS = 256
N_BANDS = 8
BAND_WIDTH_PX = 7
STATS_PER_BAND = 9
CLIP = 0.4
PAIR_SEED = 20130501

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint16)


def _comparison_pairs(seed: int = PAIR_SEED) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dim = N_BANDS * STATS_PER_BAND
    pairs = []
    seen = set()
    while len(pairs) < N_BITS:
        i, j = (int(v) for v in rng.integers(0, dim, size=2))
        if i == j or (i, j) in seen:
            continue
        seen.add((i, j))
        pairs.append((i, j))
    table = np.asarray(pairs, dtype=np.intp)
    table.setflags(write=False)
    return table


COMPARISON_PAIRS = _comparison_pairs()


@dataclass(frozen=True, eq=False)
class SliceDescriptor:
    bits: np.ndarray  # 32 packed bytes

    def hex(self) -> str:
        return self.bits.tobytes().hex()

    def hamming(self, other: "SliceDescriptor") -> int:
        return int(_POPCOUNT[np.bitwise_xor(self.bits, other.bits)].sum())


@dataclass(frozen=True, eq=False)
class RlbdDescriptor:
    slices: np.ndarray  # (n, 32) packed bytes, arc order
    m_deg: float

    def __len__(self) -> int:
        return int(len(self.slices))

    def slice(self, i: int) -> SliceDescriptor:
        return SliceDescriptor(self.slices[i])

    def hex_slices(self) -> List[str]:
        return [row.tobytes().hex() for row in self.slices]


class ImageGradients:
    """Sobel gradients of one image, computed once and sampled per slice."""

    def __init__(self, img: np.ndarray, wrap: bool = False):
        src = np.asarray(img, dtype=np.float32)
        self.gx = cv2.Sobel(src, cv2.CV_32F, 1, 0, ksize=3, borderType=cv2.BORDER_REPLICATE) / 8.0
        self.gy = cv2.Sobel(src, cv2.CV_32F, 0, 1, ksize=3, borderType=cv2.BORDER_REPLICATE) / 8.0
        self.height, self.width = src.shape
        self.mode = "grid-wrap" if wrap else "constant"

    def sample(self, xs: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        coords = np.stack([ys.ravel(), xs.ravel()])
        gx = ndimage.map_coordinates(self.gx, coords, order=1, mode=self.mode, cval=0.0)
        gy = ndimage.map_coordinates(self.gy, coords, order=1, mode=self.mode, cval=0.0)
        return gx.reshape(xs.shape), gy.reshape(xs.shape)


def _gradients_for(img: np.ndarray | ImageGradients, model: CameraModel) -> ImageGradients:
    if isinstance(img, ImageGradients):
        return img
    return ImageGradients(img, wrap=model.wraps_horizontally)


def _chord(model: CameraModel, sub: GeodesicSegment) -> Tuple[np.ndarray, np.ndarray]:
    try:
        a = model.project(sub.p_start)
        b = model.project(sub.p_end)
    except (BearingOutOfFov, ProjectionSingularity) as exc:
        raise SliceOutsideImage(f"slice does not project into the image: {exc}") from exc
    if not (model.in_image(a) and model.in_image(b)):
        raise SliceOutsideImage("slice endpoints fall outside the image")
    return a, a + model.pixel_delta(b, a)


def band_statistics(grads: ImageGradients, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """72 band statistics of the chord ``a -> b``, oriented by the cross-line gradient."""
    length = float(np.linalg.norm(b - a))
    if length < 1e-9:
        raise SliceOutsideImage("slice chord is degenerate")
    d_line = (b - a) / length
    d_perp = np.array([-d_line[1], d_line[0]])
    n_along = max(2, int(np.ceil(length)) + 1)
    half = N_BANDS * BAND_WIDTH_PX / 2.0
    offsets = np.arange(N_BANDS * BAND_WIDTH_PX) - half + 0.5
    t = np.linspace(0.0, length, n_along)
    xs = a[0] + t[None, :] * d_line[0] + offsets[:, None] * d_perp[0]
    ys = a[1] + t[None, :] * d_line[1] + offsets[:, None] * d_perp[1]
    gx, gy = grads.sample(xs, ys)
    g_line = gx * d_line[0] + gy * d_line[1]
    g_perp = gx * d_perp[0] + gy * d_perp[1]
    centre = np.abs(offsets) <= BAND_WIDTH_PX / 2.0
    if g_perp[centre].mean() < 0:
        g_line, g_perp = -g_line, -g_perp
        g_line, g_perp = g_line[::-1], g_perp[::-1]
    weight = np.exp(-(offsets ** 2) / (2.0 * (half / 2.0) ** 2))[:, None]
    g_line = g_line * weight
    g_perp = g_perp * weight
    rows = np.stack(
        [
            np.clip(g_perp, 0, None).mean(axis=1),
            np.clip(-g_perp, 0, None).mean(axis=1),
            np.clip(g_line, 0, None).mean(axis=1),
            np.clip(-g_line, 0, None).mean(axis=1),
        ],
        axis=1,
    )
    magnitude = np.hypot(g_line, g_perp).mean(axis=1)
    stats = []
    for band in range(N_BANDS):
        sl = slice(band * BAND_WIDTH_PX, (band + 1) * BAND_WIDTH_PX)
        stats.extend(rows[sl].mean(axis=0))
        stats.extend(rows[sl].std(axis=0))
        stats.append(magnitude[sl].mean())
    vec = np.asarray(stats, dtype=float)
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec = np.minimum(vec / norm, CLIP)
        vec /= np.linalg.norm(vec)
    return vec


def binarize(vec: np.ndarray) -> np.ndarray:
    bits = vec[COMPARISON_PAIRS[:, 0]] > vec[COMPARISON_PAIRS[:, 1]]
    return np.packbits(bits)


def compute_slice_descriptor(img: np.ndarray | ImageGradients, model: CameraModel, sub: GeodesicSegment) -> SliceDescriptor:
    grads = _gradients_for(img, model)
    a, b = _chord(model, sub)
    return SliceDescriptor(binarize(band_statistics(grads, a, b)))


def canonical_geo(seg: CurveSegment) -> GeodesicSegment:
    """Segment geometry oriented from the end with the smaller ``(y, x)`` pixel."""
    first = (int(seg.chain[0, 1]), int(seg.chain[0, 0]))
    last = (int(seg.chain[-1, 1]), int(seg.chain[-1, 0]))
    return seg.geo.reversed() if last < first else seg.geo


def compute_rlbd(
    img: np.ndarray | ImageGradients, model: CameraModel, seg: CurveSegment, params: MatchParams = MatchParams()
) -> RlbdDescriptor:
    grads = _gradients_for(img, model)
    rows = []
    for sub in slice_segment(canonical_geo(seg), params.m_deg):
        try:
            rows.append(compute_slice_descriptor(grads, model, sub).bits)
        except SliceOutsideImage:
            continue
    if not rows:
        raise SliceOutsideImage("no slice of the segment could be described")
    return RlbdDescriptor(np.stack(rows), params.m_deg)


def describe_all(
    img: np.ndarray, model: CameraModel, segments: Sequence[CurveSegment], params: MatchParams = MatchParams()
) -> List[Optional[RlbdDescriptor]]:
    """Descriptors aligned with ``segments``; undescribable segments yield ``None``."""
    grads = ImageGradients(img, wrap=model.wraps_horizontally)
    out: List[Optional[RlbdDescriptor]] = []
    for seg in segments:
        try:
            out.append(compute_rlbd(grads, model, seg, params))
        except SliceOutsideImage:
            out.append(None)
    return out


def hamming_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Bit distances between every row of ``a`` and every row of ``b``."""
    xor = np.bitwise_xor(a[:, None, :], b[None, :, :])
    return _POPCOUNT[xor].sum(axis=2).astype(np.int64)


def alignment_distance(H: np.ndarray, min_overlap: int) -> Optional[Fraction]:
    """Best mean Hamming fraction over diagonal and anti-diagonal alignments of ``H``."""
    n_a, n_b = H.shape
    required = min(min_overlap, n_a, n_b)
    best: Optional[Fraction] = None
    for matrix in (H, H[:, ::-1]):
        for k in range(-(n_a - 1), n_b):
            diag = np.diagonal(matrix, offset=k)
            if len(diag) < required:
                continue
            value = Fraction(int(diag.sum()), len(diag) * N_BITS)
            if best is None or value < best:
                best = value
    return best


def rlbd_distance(a: RlbdDescriptor, b: RlbdDescriptor, params: MatchParams = MatchParams()) -> float:
    dist = alignment_distance(hamming_matrix(a.slices, b.slices), params.min_overlap_slices)
    return 1.0 if dist is None else float(dist)


def match(
    a: Sequence[Optional[RlbdDescriptor]],
    b: Sequence[Optional[RlbdDescriptor]],
    params: MatchParams = MatchParams(),
) -> List[Tuple[int, int, float]]:
    """One-to-one matches ``(index_a, index_b, score)``, best score first."""
    idx_a = [i for i, d in enumerate(a) if d is not None and len(d)]
    idx_b = [j for j, d in enumerate(b) if d is not None and len(d)]
    if not idx_a or not idx_b:
        return []
    stack_a = np.concatenate([a[i].slices for i in idx_a])  # type: ignore[union-attr]
    stack_b = np.concatenate([b[j].slices for j in idx_b])  # type: ignore[union-attr]
    H = hamming_matrix(stack_a, stack_b)
    off_a = np.concatenate([[0], np.cumsum([len(a[i]) for i in idx_a])])  # type: ignore[arg-type]
    off_b = np.concatenate([[0], np.cumsum([len(b[j]) for j in idx_b])])  # type: ignore[arg-type]
    limit = Fraction(params.hamming_frac_max).limit_denominator(10**9)
    exact: dict = {}
    for p in range(len(idx_a)):
        for q in range(len(idx_b)):
            sub = H[off_a[p]:off_a[p + 1], off_b[q]:off_b[q + 1]]
            value = alignment_distance(sub, params.min_overlap_slices)
            if value is not None and value <= limit:
                exact[(p, q)] = value
    candidates = sorted(exact.items(), key=lambda item: (item[1], item[0]))
    if params.mutual_check:
        best_for_a = {}
        best_for_b = {}
        for (p, q), value in candidates:
            best_for_a.setdefault(p, q)
            best_for_b.setdefault(q, p)
        candidates = [((p, q), v) for (p, q), v in candidates if best_for_a[p] == q and best_for_b[q] == p]
    used_a, used_b = set(), set()
    matches: List[Tuple[int, int, float]] = []
    for (p, q), value in candidates:
        if p in used_a or q in used_b:
            continue
        used_a.add(p)
        used_b.add(q)
        matches.append((idx_a[p], idx_b[q], float(1 - value)))
    logger.debug("match: %d x %d descriptors -> %d matches", len(idx_a), len(idx_b), len(matches))
    return matches


__all__ = [
    "COMPARISON_PAIRS",
    "ImageGradients",
    "N_BITS",
    "RlbdDescriptor",
    "SliceDescriptor",
    "alignment_distance",
    "band_statistics",
    "binarize",
    "canonical_geo",
    "compute_rlbd",
    "compute_slice_descriptor",
    "describe_all",
    "hamming_matrix",
    "match",
    "rlbd_distance",
]
