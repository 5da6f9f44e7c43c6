"""Image and CSV input/output.

All writers go through :func:`atomic_write`: the file appears fully written or
not at all. A path of ``-`` writes to stdout instead.
"""

from __future__ import annotations

import csv
import io
import os
import sys
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import cv2
import numpy as np

from .errors import ParseError
from .evaluation import PairResult
from .features.descriptor import RlbdDescriptor
from .features.detector import CurveSegment
from .geometry.sphere import GeodesicSegment, GreatCircle
from .synthetic import GtSegment

PathLike = Union[str, Path]
STDOUT = "-"
LUMA = (0.299, 0.587, 0.114)


def _fmt(value: float) -> str:
    return f"{float(value):.9g}"


def atomic_write(path: PathLike, data: Union[str, bytes]) -> None:
    """Write ``data`` through a temp file in the target directory, then rename."""
    if str(path) == STDOUT:
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
            sys.stdout.buffer.flush()
        else:
            sys.stdout.write(data)
            sys.stdout.flush()
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=str(target.parent))
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def read_image(path: PathLike) -> np.ndarray:
    """8-bit grayscale image from a PGM (P5) or PPM (P6) file; colour is reduced to luma."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Image not found at {path}.")
    raw = np.fromfile(str(path), dtype=np.uint8)
    img = cv2.imdecode(raw, cv2.IMREAD_UNCHANGED)
    if img is None:
        raise ParseError(f"{path}: not a readable PGM/PPM image")
    if img.dtype != np.uint8:
        raise ParseError(f"{path}: only 8-bit images are supported, got {img.dtype}")
    if img.ndim == 3:
        # OpenCV decodes colour as BGR
        b, g, r = (img[..., i].astype(np.float64) for i in range(3))
        img = np.clip(np.rint(LUMA[0] * r + LUMA[1] * g + LUMA[2] * b), 0, 255).astype(np.uint8)
    return img


def encode_pgm(img: np.ndarray) -> bytes:
    ok, buf = cv2.imencode(".pgm", np.ascontiguousarray(img, dtype=np.uint8))
    if not ok:
        raise ValueError("PGM encoding failed")
    return buf.tobytes()


def write_image(path: PathLike, img: np.ndarray) -> None:
    atomic_write(path, encode_pgm(img))


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


SEGMENT_HEADER = ("id", "n_px", "kx", "ky", "kz", "xs", "ys", "xe", "ye", "avg_fit_px")
CHAIN_HEADER = ("id", "x", "y")
GT_HEADER = ("id", "kx", "ky", "kz", "bsx", "bsy", "bsz", "bex", "bey", "bez")
MATCH_HEADER = ("id_a", "id_b", "score")
EVAL_HEADER = ("pair_id", "rep", "le", "n_a", "n_b")


def segments_csv(segments: Sequence[CurveSegment]) -> str:
    rows = []
    for i, seg in enumerate(segments):
        k = seg.geo.k
        xs, ys = seg.start_px
        xe, ye = seg.end_px
        rows.append([i, seg.n_px, *map(_fmt, k), *map(_fmt, (xs, ys, xe, ye)), _fmt(seg.avg_fit_px)])
    return _csv_text(SEGMENT_HEADER, rows)


def chains_csv(segments: Sequence[CurveSegment]) -> str:
    rows = [[i, int(x), int(y)] for i, seg in enumerate(segments) for x, y in seg.chain]
    return _csv_text(CHAIN_HEADER, rows)


def write_segments(path: PathLike, segments: Sequence[CurveSegment], chain_path: Optional[PathLike] = None) -> None:
    atomic_write(path, segments_csv(segments))
    if chain_path is not None:
        atomic_write(chain_path, chains_csv(segments))


def gt_csv(gt: Sequence[Union[GtSegment, GeodesicSegment]]) -> str:
    rows = []
    for i, item in enumerate(gt):
        geo = item.geo if isinstance(item, GtSegment) else item
        line_id = item.line_id if isinstance(item, GtSegment) else i
        rows.append([line_id, *map(_fmt, geo.k), *map(_fmt, geo.p_start), *map(_fmt, geo.p_end)])
    return _csv_text(GT_HEADER, rows)


def write_gt(path: PathLike, gt: Sequence[Union[GtSegment, GeodesicSegment]]) -> None:
    atomic_write(path, gt_csv(gt))


def read_gt(path: PathLike) -> List[GeodesicSegment]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Ground-truth file not found at {path}.")
    out = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != GT_HEADER:
            raise ParseError(f"{path}: expected header {','.join(GT_HEADER)}")
        for row in reader:
            try:
                start = np.array([float(row[c]) for c in ("bsx", "bsy", "bsz")])
                end = np.array([float(row[c]) for c in ("bex", "bey", "bez")])
                k = np.array([float(row[c]) for c in ("kx", "ky", "kz")])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{reader.line_num}: {exc}") from exc
            out.append(GeodesicSegment(GreatCircle(k), start, end))
    return out


def descriptors_csv(descriptors: Sequence[Optional[RlbdDescriptor]]) -> str:
    rows = []
    for i, desc in enumerate(descriptors):
        if desc is None:
            rows.append([i, 0])
        else:
            rows.append([i, len(desc), *desc.hex_slices()])
    return _csv_text(("id", "n_slices", "slices"), rows)


def matches_csv(matches: Sequence[Tuple[int, int, float]]) -> str:
    return _csv_text(MATCH_HEADER, [[a, b, _fmt(s)] for a, b, s in matches])


def eval_csv(results: Sequence[Tuple[str, PairResult]]) -> str:
    rows = []
    reps, les, n_as, n_bs = [], [], [], []
    for pair_id, res in results:
        le = "" if res.le is None else _fmt(res.le)
        rows.append([pair_id, _fmt(res.rep), le, res.n_detected_a, res.n_detected_b])
        reps.append(res.rep)
        if res.le is not None:
            les.append(res.le)
        n_as.append(res.n_detected_a)
        n_bs.append(res.n_detected_b)
    if results:
        rows.append([
            "MEAN",
            _fmt(np.mean(reps)),
            _fmt(np.mean(les)) if les else "",
            _fmt(np.mean(n_as)),
            _fmt(np.mean(n_bs)),
        ])
    return _csv_text(EVAL_HEADER, rows)


def read_pairs(path: PathLike) -> List[Tuple[str, Path, Path, np.ndarray]]:
    """Pair list rows ``pair_id image_a image_b rx ry rz`` (rotation vector, degrees).

    Relative image paths resolve against the pair file's directory.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Pair list not found at {path}.")
    out = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8-sig").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ParseError(f"{path}:{lineno}: expected 'pair_id image_a image_b rx ry rz'")
        try:
            rotvec = np.radians([float(v) for v in parts[3:]])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        img_a, img_b = (Path(p) if Path(p).is_absolute() else path.parent / p for p in parts[1:3])
        out.append((parts[0], img_a, img_b, rotvec))
    return out


__all__ = [
    "STDOUT",
    "atomic_write",
    "chains_csv",
    "descriptors_csv",
    "encode_pgm",
    "eval_csv",
    "gt_csv",
    "matches_csv",
    "read_gt",
    "read_image",
    "read_pairs",
    "segments_csv",
    "write_gt",
    "write_image",
    "write_segments",
]
