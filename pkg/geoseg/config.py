"""Configuration: camera files, parameter records and CLI flag plumbing."""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Type, TypeVar

from .errors import InvalidParameter
from .geometry.camera import CameraModel, load_model

REPO_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CAMERA_DIR = REPO_ROOT / "config" / "cameras"
SEED_ENV = "GEOSEG_SEED"
DEFAULT_SEED = 7

P = TypeVar("P")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParameter(message)


@dataclass(frozen=True)
class DetectorParams:
    t_anchor: float = 8.0
    t_gradient_min: float = 36.0
    t_fit_px: float = 1.5
    t_outliers: int = 3
    min_fit_len: int = 15
    min_segment_len_px: int = 30
    refit_interval: int = 8
    anchor_scan_stride: int = 2
    gaussian_sigma: float = 1.0

    def __post_init__(self) -> None:
        for name in (
            "t_anchor", "t_gradient_min", "t_fit_px", "t_outliers", "min_fit_len",
            "min_segment_len_px", "refit_interval", "anchor_scan_stride", "gaussian_sigma",
        ):
            _require(getattr(self, name) > 0, f"{name} must be positive, got {getattr(self, name)}")
        _require(
            self.min_fit_len < self.min_segment_len_px,
            f"min_fit_len ({self.min_fit_len}) must be below min_segment_len_px ({self.min_segment_len_px})",
        )


@dataclass(frozen=True)
class MatchParams:
    m_deg: float = 10.0
    hamming_frac_max: float = 0.25
    min_overlap_slices: int = 2
    mutual_check: bool = True

    def __post_init__(self) -> None:
        _require(self.m_deg > 0, f"m_deg must be positive, got {self.m_deg}")
        _require(0.0 < self.hamming_frac_max < 1.0, f"hamming_frac_max must be in (0, 1), got {self.hamming_frac_max}")
        _require(self.min_overlap_slices >= 1, f"min_overlap_slices must be >= 1, got {self.min_overlap_slices}")


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 100
    huber_delta_point: float = 1.5 / 300.0
    huber_delta_line: float = 1.5 / 300.0
    lm_lambda_init: float = 1e-4
    lm_lambda_max: float = 1e16
    rel_cost_tol: float = 1e-10
    grad_tol: float = 1e-10
    robust: bool = True
    threads: int = 1

    def __post_init__(self) -> None:
        for name in ("max_iters", "huber_delta_point", "huber_delta_line", "lm_lambda_init",
                     "lm_lambda_max", "rel_cost_tol", "grad_tol", "threads"):
            _require(getattr(self, name) > 0, f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class RenderStyle:
    line_intensity: int = 30
    background: int = 220
    stroke_width: int = 2
    noise_sigma: float = 0.0
    antialias: bool = True
    min_gt_px: float = 30.0
    outside_value: int = 0

    def __post_init__(self) -> None:
        for name in ("line_intensity", "background", "outside_value"):
            value = getattr(self, name)
            _require(0 <= value <= 255, f"{name} must be an 8-bit level, got {value}")
        _require(self.stroke_width >= 1, f"stroke_width must be >= 1, got {self.stroke_width}")
        _require(self.noise_sigma >= 0 and math.isfinite(self.noise_sigma), f"noise_sigma must be >= 0, got {self.noise_sigma}")
        _require(self.min_gt_px >= 0, f"min_gt_px must be >= 0, got {self.min_gt_px}")


class ConfigLoader:
    """Static helpers for camera files and run-level settings."""

    @staticmethod
    def load_camera(path: Path | str) -> CameraModel:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Camera config not found at {path}.")
        return load_model(path.read_text(encoding="utf-8-sig"))

    @staticmethod
    def camera_fixture(name: str) -> CameraModel:
        """One of the bundled cameras under ``config/cameras`` by stem name."""
        return ConfigLoader.load_camera(DEFAULT_CAMERA_DIR / f"{name}.json")

    @staticmethod
    def fixture_names() -> list[str]:
        return sorted(p.stem for p in DEFAULT_CAMERA_DIR.glob("*.json"))

    @staticmethod
    def resolve_seed(cli_value: Optional[int], environ: Optional[Mapping[str, str]] = None) -> int:
        if cli_value is not None:
            return int(cli_value)
        environ = os.environ if environ is None else environ
        raw = environ.get(SEED_ENV)
        if raw is None or raw.strip() == "":
            return DEFAULT_SEED
        try:
            return int(raw.strip())
        except ValueError as exc:
            raise ValueError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc


def flag_name(field_name: str) -> str:
    return "--" + field_name.replace("_", "-")


def add_dataclass_arguments(
    parser: argparse.ArgumentParser, cls: Type[Any], skip: Iterable[str] = ()
) -> None:
    """One ``--kebab-case`` flag per field; absent flags leave the default untouched."""
    group = parser.add_argument_group(cls.__name__)
    skipped = set(skip)
    for f in dataclasses.fields(cls):
        if f.name in skipped:
            continue
        default = f.default
        if isinstance(default, bool):
            group.add_argument(
                flag_name(f.name), dest=f.name, action=argparse.BooleanOptionalAction,
                default=argparse.SUPPRESS, help=f"default: {default}",
            )
        else:
            group.add_argument(
                flag_name(f.name), dest=f.name, type=type(default),
                default=argparse.SUPPRESS, help=f"default: {default}",
            )


def params_from_args(args: argparse.Namespace, cls: Type[P]) -> P:
    overrides: Dict[str, Any] = {}
    for f in dataclasses.fields(cls):  # type: ignore[arg-type]
        if hasattr(args, f.name):
            overrides[f.name] = getattr(args, f.name)
    return cls(**overrides)


__all__ = [
    "ConfigLoader",
    "DEFAULT_CAMERA_DIR",
    "DEFAULT_SEED",
    "DetectorParams",
    "MatchParams",
    "REPO_ROOT",
    "RenderStyle",
    "SEED_ENV",
    "SolveOptions",
    "add_dataclass_arguments",
    "flag_name",
    "params_from_args",
]
