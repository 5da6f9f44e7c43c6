"""Command-line entry point: ``synth``, ``detect``, ``match``, ``eval``, ``ba`` and ``demo``.

Exit codes: 0 success, 1 domain or I/O error (one ``[error]`` line on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from . import imageio
from .backend.problem import read_problem, write_problem
from .backend.solver import solve
from .config import (
    DEFAULT_CAMERA_DIR,
    ConfigLoader,
    DetectorParams,
    MatchParams,
    RenderStyle,
    SolveOptions,
    add_dataclass_arguments,
    params_from_args,
)
from .demo import run_demo
from .errors import GeosegError
from .evaluation import DEFAULT_EPS_PX, evaluate_pair, make_rotated_pair
from .features.descriptor import describe_all, match
from .features.detector import detect, detect_with_stats
from .geometry.camera import CameraModel
from .geometry.lines import Pose
from .logs import configure
from .synthetic import gen_scene, render

logger = logging.getLogger("geoseg.cli")

DEFAULT_MODEL = DEFAULT_CAMERA_DIR / "fisheye_mei.json"


class UsageError(Exception):
    """Invalid combination of arguments detected after parsing."""


def _load_model(path: Optional[str]) -> CameraModel:
    return ConfigLoader.load_camera(Path(path) if path else DEFAULT_MODEL)


def _seed(args: argparse.Namespace) -> int:
    try:
        return ConfigLoader.resolve_seed(args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _info(message: str) -> None:
    logger.info(message)


def cmd_synth(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    seed = _seed(args)
    style = params_from_args(args, RenderStyle)
    scene = gen_scene(seed, args.lines)
    pose = Pose.from_rotvec(np.radians(args.pose[:3]), np.asarray(args.pose[3:], dtype=float))
    frame = render(scene, pose, model, style, noise_seed=seed)
    imageio.write_image(args.out, frame.image)
    if args.gt:
        imageio.write_gt(args.gt, frame.gt)
    _info(f"rendered {len(scene)} lines -> {len(frame.gt)} ground-truth segments")
    if args.rotate is not None:
        if not args.pair_out:
            raise UsageError("--rotate needs --pair-out")
        R = Rotation.from_rotvec(np.radians(args.rotate)).as_matrix()
        pair = make_rotated_pair(frame.image, model, R)
        imageio.write_image(args.pair_out, pair.image)
        _info(f"wrote rotated pair image to {args.pair_out}")
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    img = imageio.read_image(args.image)
    segments, stats = detect_with_stats(img, model, params_from_args(args, DetectorParams))
    _info(stats.summary())
    imageio.write_segments(args.out, segments, args.chain)
    if args.descriptors:
        descs = describe_all(img, model, segments, params_from_args(args, MatchParams))
        imageio.atomic_write(args.descriptors, imageio.descriptors_csv(descs))
    return 0


def cmd_match(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    det = params_from_args(args, DetectorParams)
    mp = params_from_args(args, MatchParams)
    img_a = imageio.read_image(args.image_a)
    img_b = imageio.read_image(args.image_b)
    segs_a = detect(img_a, model, det)
    segs_b = detect(img_b, model, det)
    desc_a = describe_all(img_a, model, segs_a, mp)
    desc_b = describe_all(img_b, model, segs_b, mp)
    matches = match(desc_a, desc_b, mp)
    _info(f"{len(segs_a)} / {len(segs_b)} segments -> {len(matches)} matches")
    imageio.atomic_write(args.out, imageio.matches_csv(matches))
    if args.dump:
        imageio.atomic_write(args.dump[0], imageio.descriptors_csv(desc_a))
        imageio.atomic_write(args.dump[1], imageio.descriptors_csv(desc_b))
    if args.segments_a:
        imageio.write_segments(args.segments_a, segs_a)
    if args.segments_b:
        imageio.write_segments(args.segments_b, segs_b)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    det = params_from_args(args, DetectorParams)
    pairs = imageio.read_pairs(args.pairs)

    def run(pair):
        pair_id, path_a, path_b, rotvec = pair
        img_a = imageio.read_image(path_a)
        img_b = imageio.read_image(path_b)
        R = Rotation.from_rotvec(rotvec).as_matrix()
        masks = None
        if not args.no_masks:
            warped = make_rotated_pair(img_a, model, R, max_rotation_deg=args.max_rotation_deg)
            masks = (warped.mask_a, warped.mask_b)
        result = evaluate_pair(
            img_a, img_b, model, R, lambda im: detect(im, model, det), args.eps, args.metric, masks,
        )
        return pair_id, result

    if args.threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(p) for p in pairs]
    for pair_id, res in results:
        le = "n/a" if res.le is None else f"{res.le:.3f}"
        _info(f"{pair_id}: rep {res.rep:.3f} le {le}" + (" (empty side)" if res.empty_side else ""))
    imageio.atomic_write(args.out, imageio.eval_csv(results))
    return 0


def cmd_ba(args: argparse.Namespace) -> int:
    path = Path(args.problem)
    if not path.exists():
        raise FileNotFoundError(f"Problem file not found at {path}.")
    problem = read_problem(path.read_text(encoding="utf-8-sig"))
    opts = params_from_args(args, SolveOptions)
    refined, report = solve(problem, opts)
    if args.out:
        imageio.atomic_write(args.out, write_problem(refined))
    imageio.atomic_write(args.report, report.to_json() + "\n")
    if not report.converged:
        logger.warning("solver stopped without converging (%s)", report.termination)
    return 0


def cmd_demo(args: argparse.Namespace) -> int:
    model = _load_model(args.model) if args.model else None
    result = run_demo(
        _seed(args),
        model=model,
        detector=params_from_args(args, DetectorParams),
        matching=params_from_args(args, MatchParams),
        opts=params_from_args(args, SolveOptions),
        log=_info,
    )
    for line in result.summary():
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoseg", description="Geodesic curve segments for omnidirectional cameras")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic wireframe frame with ground truth")
    p.add_argument("--seed", type=int, default=None, help="scene seed (falls back to GEOSEG_SEED)")
    p.add_argument("--lines", type=int, default=40)
    p.add_argument("--model", help="camera JSON (default: bundled fisheye)")
    p.add_argument("--out", required=True, help="output PGM path")
    p.add_argument("--gt", help="ground-truth CSV path")
    p.add_argument("--pose", type=float, nargs=6, default=[0.0] * 6, metavar=("RX", "RY", "RZ", "TX", "TY", "TZ"),
                   help="camera-to-world pose, rotation vector in degrees")
    p.add_argument("--rotate", type=float, nargs=3, metavar=("RX", "RY", "RZ"),
                   help="also write the frame as seen after this rotation (degrees)")
    p.add_argument("--pair-out", help="output PGM for --rotate")
    add_dataclass_arguments(p, RenderStyle)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="detect curve segments in one image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True, help="segment CSV ('-' for stdout)")
    p.add_argument("--chain", help="pixel-chain sidecar CSV")
    p.add_argument("--descriptors", help="also dump per-segment descriptors as CSV")
    add_dataclass_arguments(p, DetectorParams)
    add_dataclass_arguments(p, MatchParams)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("match", help="detect and match segments between two images")
    p.add_argument("--model", required=True)
    p.add_argument("--image-a", required=True)
    p.add_argument("--image-b", required=True)
    p.add_argument("--out", required=True, help="match CSV ('-' for stdout)")
    p.add_argument("--segments-a")
    p.add_argument("--segments-b")
    p.add_argument("--dump", nargs=2, metavar=("A_CSV", "B_CSV"), help="also write both descriptor sets as CSV")
    add_dataclass_arguments(p, DetectorParams)
    add_dataclass_arguments(p, MatchParams)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval", help="repeatability and localization error over rotated pairs")
    p.add_argument("--pairs", required=True, help="lines of 'pair_id image_a image_b rx ry rz' (degrees)")
    p.add_argument("--model", required=True)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS_PX)
    p.add_argument("--metric", choices=("orth", "struct"), default="orth")
    p.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-masks", action="store_true", help="count every segment, not just covisible ones")
    p.add_argument("--max-rotation-deg", type=float, default=None)
    add_dataclass_arguments(p, DetectorParams)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ba", help="robust bundle adjustment of a problem file")
    p.add_argument("--problem", required=True)
    p.add_argument("--out", help="write the optimized problem here")
    p.add_argument("--report", default="-", help="JSON report path ('-' for stdout)")
    add_dataclass_arguments(p, SolveOptions)
    p.set_defaults(func=cmd_ba)

    p = sub.add_parser("demo", help="two-frame detect, match, triangulate and refine example")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--model", help="camera JSON (default: bundled fisheye)")
    add_dataclass_arguments(p, DetectorParams)
    add_dataclass_arguments(p, MatchParams)
    add_dataclass_arguments(p, SolveOptions)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    configure(args.verbose)
    try:
        return int(args.func(args))
    except UsageError as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return 2
    except (GeosegError, OSError, ValueError) as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"[error] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
