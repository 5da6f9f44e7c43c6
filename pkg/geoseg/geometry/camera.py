"""Camera models mapping image pixels to unit-sphere bearings and back.

Four families share one interface: equirectangular panoramas, the unified
(MEI) model, the Scaramuzza polynomial model and plain pinhole. Pixel
coordinates have their origin at the centre of the top-left pixel, x to the
right and y down. Bearings are unit 3-vectors; the optical axis is +z and the
valid field of view of every model is a band of polar angles measured from it.

The vectorized ``project_many`` / ``unproject_many`` methods never raise and
return an ``ok`` mask instead; the scalar wrappers raise the domain errors.
"""

from __future__ import annotations

import functools
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import (
    BearingOutOfFov,
    InvalidParameter,
    ParseError,
    PixelOutOfDomain,
    ProjectionSingularity,
)

logger = logging.getLogger(__name__)

MEI_DENOM_EPS = 1e-12
FOV_TOLERANCE_RAD = 1e-9
NEWTON_MAX_ITERS = 50
NEWTON_TOL = 1e-10
UNDISTORT_MAX_ITERS = 100


def polar_angle(bearings: np.ndarray) -> np.ndarray:
    """Angle from +z in radians, for one bearing or an (N, 3) array."""
    b = np.asarray(bearings, dtype=float)
    norm = np.linalg.norm(b, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.clip(b[..., 2] / norm, -1.0, 1.0)
    return np.arccos(cos)


def normalize_rows(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return v / norm


@dataclass(frozen=True)
class CameraModel(ABC):
    """Common behaviour: FoV band, image bounds, scalar wrappers."""

    fov_min_deg: float
    fov_max_deg: float

    kind = "abstract"
    wraps_horizontally = False

    def _check_fov(self) -> None:
        if not (0.0 <= self.fov_min_deg < self.fov_max_deg <= 180.0):
            raise InvalidParameter(
                f"fov_deg must satisfy 0 <= min < max <= 180, got [{self.fov_min_deg}, {self.fov_max_deg}]"
            )

    @property
    @abstractmethod
    def size(self) -> Tuple[int, int]:
        """Image ``(width, height)`` in pixels."""

    @abstractmethod
    def _project(self, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Raw mapping of unit bearings (N, 3) to pixels (N, 2) and a finite/defined mask."""

    @abstractmethod
    def _unproject(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Raw mapping of pixels (N, 2) to unit bearings (N, 3) and a defined mask."""

    # band -----------------------------------------------------------------
    def in_fov(self, bearings: np.ndarray) -> np.ndarray:
        theta = polar_angle(bearings)
        lo = math.radians(self.fov_min_deg) - FOV_TOLERANCE_RAD
        hi = math.radians(self.fov_max_deg) + FOV_TOLERANCE_RAD
        return (theta >= lo) & (theta <= hi)

    def in_image(self, pixels: np.ndarray) -> np.ndarray:
        p = np.asarray(pixels, dtype=float)
        width, height = self.size
        inside_y = (p[..., 1] >= -0.5) & (p[..., 1] <= height - 0.5)
        if self.wraps_horizontally:
            return inside_y & np.isfinite(p[..., 0])
        return inside_y & (p[..., 0] >= -0.5) & (p[..., 0] <= width - 0.5)

    # vectorized -----------------------------------------------------------
    def project_many(self, bearings: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        b = normalize_rows(np.atleast_2d(np.asarray(bearings, dtype=float)))
        finite = np.all(np.isfinite(b), axis=1)
        b_safe = np.where(finite[:, None], b, np.array([0.0, 0.0, 1.0]))
        pixels, ok = self._project(b_safe)
        ok = ok & finite & self.in_fov(b_safe) & np.all(np.isfinite(pixels), axis=1)
        return pixels, ok

    def unproject_many(self, pixels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        p = np.atleast_2d(np.asarray(pixels, dtype=float))
        finite = np.all(np.isfinite(p), axis=1)
        p_safe = np.where(finite[:, None], p, 0.0)
        bearings, ok = self._unproject(p_safe)
        ok = ok & finite & self.in_image(p_safe) & np.all(np.isfinite(bearings), axis=1)
        ok &= self.in_fov(np.where(ok[:, None], bearings, np.array([0.0, 0.0, 1.0])))
        return bearings, ok

    # scalar ---------------------------------------------------------------
    def project(self, bearing: np.ndarray) -> np.ndarray:
        b = np.asarray(bearing, dtype=float).reshape(3)
        if not self.is_valid_bearing(b):
            theta = math.degrees(float(polar_angle(b)))
            raise BearingOutOfFov(
                f"bearing at polar angle {theta:.6f} deg outside [{self.fov_min_deg}, {self.fov_max_deg}]"
            )
        pixels, ok = self._project(normalize_rows(b[None, :]))
        if not ok[0] or not np.all(np.isfinite(pixels[0])):
            raise ProjectionSingularity(f"{self.kind}: bearing {b.tolist()} has no finite projection")
        return pixels[0]

    def unproject(self, pixel: np.ndarray) -> np.ndarray:
        p = np.asarray(pixel, dtype=float).reshape(2)
        bearings, ok = self.unproject_many(p[None, :])
        if not ok[0]:
            raise PixelOutOfDomain(f"{self.kind}: pixel ({p[0]:.3f}, {p[1]:.3f}) outside the valid domain")
        return bearings[0]

    def is_valid_bearing(self, bearing: np.ndarray) -> bool:
        b = np.asarray(bearing, dtype=float).reshape(3)
        if not np.all(np.isfinite(b)) or np.linalg.norm(b) == 0.0:
            return False
        return bool(self.in_fov(b))

    def is_valid_pixel(self, pixel: np.ndarray) -> bool:
        _, ok = self.unproject_many(np.asarray(pixel, dtype=float).reshape(1, 2))
        return bool(ok[0])

    def pixel_delta(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """``p - q``; equirectangular images wrap the horizontal component at the seam."""
        delta = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
        if self.wraps_horizontally:
            width = float(self.size[0])
            delta = delta.copy()
            delta[..., 0] = (delta[..., 0] + width / 2.0) % width - width / 2.0
        return delta

    def pixel_distance(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.pixel_delta(p, q), axis=-1)


@dataclass(frozen=True)
class Equirectangular(CameraModel):
    """Longitude along x, latitude along y.

    Projected x lies in [0, W): the meridian behind the camera (longitude pi)
    maps to x = 0, the same column that x = W unprojects to.
    """

    width: int = 1024
    height: int = 512
    fov_min_deg: float = 0.0
    fov_max_deg: float = 180.0

    kind = "equirectangular"
    wraps_horizontally = True

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise InvalidParameter(f"image size must be positive, got {self.width}x{self.height}")
        self._check_fov()

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    def _project(self, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        theta = np.arctan2(b[:, 1], b[:, 0])
        lat = np.arcsin(np.clip(b[:, 2], -1.0, 1.0))
        x = (theta / (2.0 * math.pi) + 0.5) * self.width
        x = np.mod(x, self.width)
        y = (0.5 - lat / math.pi) * self.height
        return np.stack([x, y], axis=1), np.ones(len(b), dtype=bool)

    def _unproject(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        theta = (p[:, 0] / self.width - 0.5) * 2.0 * math.pi
        lat = (0.5 - p[:, 1] / self.height) * math.pi
        ok = np.abs(lat) <= math.pi / 2.0
        lat = np.clip(lat, -math.pi / 2.0, math.pi / 2.0)
        cos_lat = np.cos(lat)
        b = np.stack([cos_lat * np.cos(theta), cos_lat * np.sin(theta), np.sin(lat)], axis=1)
        return b, ok

    def in_image(self, pixels: np.ndarray) -> np.ndarray:
        p = np.asarray(pixels, dtype=float)
        return np.isfinite(p[..., 0]) & (p[..., 1] >= 0.0) & (p[..., 1] <= self.height)


def _distort(m: np.ndarray, k1: float, k2: float, p1: float, p2: float) -> np.ndarray:
    mx, my = m[:, 0], m[:, 1]
    r2 = mx * mx + my * my
    radial = 1.0 + k1 * r2 + k2 * r2 * r2
    dx = 2.0 * p1 * mx * my + p2 * (r2 + 2.0 * mx * mx)
    dy = p1 * (r2 + 2.0 * my * my) + 2.0 * p2 * mx * my
    return np.stack([mx * radial + dx, my * radial + dy], axis=1)


def _undistort(md: np.ndarray, k1: float, k2: float, p1: float, p2: float) -> np.ndarray:
    m = md.copy()
    for _ in range(UNDISTORT_MAX_ITERS):
        mx, my = m[:, 0], m[:, 1]
        r2 = mx * mx + my * my
        radial = 1.0 + k1 * r2 + k2 * r2 * r2
        dx = 2.0 * p1 * mx * my + p2 * (r2 + 2.0 * mx * mx)
        dy = p1 * (r2 + 2.0 * my * my) + 2.0 * p2 * mx * my
        updated = np.stack([(md[:, 0] - dx) / radial, (md[:, 1] - dy) / radial], axis=1)
        step = np.max(np.abs(updated - m)) if len(m) else 0.0
        m = updated
        if step < 1e-14:
            break
    return m


@dataclass(frozen=True)
class UnifiedMei(CameraModel):
    xi: float = 1.0
    fx: float = 250.0
    fy: float = 250.0
    cx: float = 320.0
    cy: float = 320.0
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    width: int = 0
    height: int = 0
    fov_min_deg: float = 0.0
    fov_max_deg: float = 120.0

    kind = "mei"

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidParameter(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.xi < 0:
            raise InvalidParameter(f"xi must be non-negative, got {self.xi}")
        if self.width <= 0:
            object.__setattr__(self, "width", int(round(2.0 * self.cx)))
        if self.height <= 0:
            object.__setattr__(self, "height", int(round(2.0 * self.cy)))
        if self.width <= 0 or self.height <= 0:
            raise InvalidParameter(f"image size must be positive, got {self.width}x{self.height}")
        self._check_fov()

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    @property
    def distorted(self) -> bool:
        return any(v != 0.0 for v in (self.k1, self.k2, self.p1, self.p2))

    def _project(self, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        denom = b[:, 2] + self.xi
        ok = denom > MEI_DENOM_EPS
        safe = np.where(ok, denom, 1.0)
        m = np.stack([b[:, 0] / safe, b[:, 1] / safe], axis=1)
        if self.distorted:
            m = _distort(m, self.k1, self.k2, self.p1, self.p2)
        pixels = np.stack([self.fx * m[:, 0] + self.cx, self.fy * m[:, 1] + self.cy], axis=1)
        return pixels, ok

    def _unproject(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        m = np.stack([(p[:, 0] - self.cx) / self.fx, (p[:, 1] - self.cy) / self.fy], axis=1)
        if self.distorted:
            m = _undistort(m, self.k1, self.k2, self.p1, self.p2)
        r2 = m[:, 0] ** 2 + m[:, 1] ** 2
        disc = 1.0 + (1.0 - self.xi * self.xi) * r2
        ok = disc >= 0.0
        lift = (self.xi + np.sqrt(np.maximum(disc, 0.0))) / (1.0 + r2)
        b = np.stack([lift * m[:, 0], lift * m[:, 1], lift - self.xi], axis=1)
        # second branch of the lift for xi > 1 lies behind the mirror
        ok &= (b[:, 2] + self.xi) > MEI_DENOM_EPS
        return normalize_rows(b), ok


@dataclass(frozen=True)
class Scaramuzza(CameraModel):
    a: Tuple[float, float, float, float, float] = (-250.0, 0.0, 1.0 / 360.0, 0.0, 0.0)
    cx: float = 640.0
    cy: float = 480.0
    c: float = 1.0
    d: float = 0.0
    e: float = 0.0
    width: int = 1280
    height: int = 960
    fov_min_deg: float = 0.0
    fov_max_deg: float = 120.0
    _table: Tuple[np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False, hash=False)

    kind = "scaramuzza"

    def __post_init__(self) -> None:
        coeffs = tuple(float(v) for v in self.a)
        if len(coeffs) != 5:
            raise InvalidParameter(f"scaramuzza needs 5 polynomial coefficients, got {len(coeffs)}")
        object.__setattr__(self, "a", coeffs)
        if coeffs[0] == 0.0:
            raise InvalidParameter("scaramuzza a0 must be non-zero")
        if self.width <= 0 or self.height <= 0:
            raise InvalidParameter(f"image size must be positive, got {self.width}x{self.height}")
        if abs(self.c - self.d * self.e) < 1e-12:
            raise InvalidParameter("scaramuzza affine matrix [[c, d], [e, 1]] is singular")
        self._check_fov()
        object.__setattr__(self, "_table", self._build_table())

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    def poly(self, rho: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(rho, self.a)

    def poly_deriv(self, rho: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(rho, np.polynomial.polynomial.polyder(self.a))

    def _max_radius(self) -> float:
        width, height = self.size
        corners = np.array([[-0.5, -0.5], [width - 0.5, -0.5], [-0.5, height - 0.5], [width - 0.5, height - 0.5]])
        sensor = self._to_sensor(corners)
        return float(np.max(np.linalg.norm(sensor, axis=1))) * 1.05

    def _build_table(self) -> Tuple[np.ndarray, np.ndarray]:
        """Polar angle as a function of radius, monotone prefix only; seeds the Newton solve."""
        rho = np.linspace(0.0, self._max_radius(), 4096)
        theta = np.arctan2(rho, -self.poly(rho) * np.sign(-self.a[0]))
        increasing = np.concatenate([[True], np.diff(theta) > 0])
        stop = int(np.argmin(increasing)) if not np.all(increasing) else len(rho)
        return theta[:stop], rho[:stop]

    def _to_sensor(self, p: np.ndarray) -> np.ndarray:
        u = p[:, 0] - self.cx
        v = p[:, 1] - self.cy
        det = self.c - self.d * self.e
        xs = (u - self.d * v) / det
        ys = (self.c * v - self.e * u) / det
        return np.stack([xs, ys], axis=1)

    def _from_sensor(self, s: np.ndarray) -> np.ndarray:
        u = self.c * s[:, 0] + self.d * s[:, 1]
        v = self.e * s[:, 0] + s[:, 1]
        return np.stack([u + self.cx, v + self.cy], axis=1)

    def _sign(self) -> float:
        # a0 < 0 puts the image centre on +z
        return 1.0 if self.a[0] < 0 else -1.0

    def _unproject(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        s = self._to_sensor(p)
        rho = np.linalg.norm(s, axis=1)
        z = -self._sign() * self.poly(rho)
        b = normalize_rows(np.stack([s[:, 0], s[:, 1], z], axis=1))
        theta_table, rho_table = self._table
        ok = rho <= rho_table[-1]
        return b, ok

    def _project(self, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        sign = self._sign()
        s_norm = np.hypot(b[:, 0], b[:, 1])
        gamma = b[:, 2]
        theta = np.arctan2(s_norm, gamma)
        theta_table, rho_table = self._table
        ok = theta <= theta_table[-1] + 1e-9
        rho = np.interp(theta, theta_table, rho_table)
        tol = NEWTON_TOL * max(1.0, abs(self.a[0]))
        # g(rho) = s * f(rho) * sign + gamma * rho vanishes on the ray
        active = ok & (s_norm > 0)
        for _ in range(NEWTON_MAX_ITERS):
            if not np.any(active):
                break
            g = sign * s_norm * self.poly(rho) + gamma * rho
            dg = sign * s_norm * self.poly_deriv(rho) + gamma
            done = np.abs(g) <= tol
            active &= ~done
            safe = np.where(np.abs(dg) > 1e-300, dg, 1.0)
            step = np.where(active, g / safe, 0.0)
            rho = np.clip(rho - step, 0.0, rho_table[-1] * 1.5)
        g = sign * s_norm * self.poly(rho) + gamma * rho
        converged = (np.abs(g) <= tol) | (s_norm == 0)
        ok &= converged
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(s_norm > 0, rho / np.where(s_norm > 0, s_norm, 1.0), 0.0)
        sensor = np.stack([b[:, 0] * scale, b[:, 1] * scale], axis=1)
        return self._from_sensor(sensor), ok


@dataclass(frozen=True)
class Pinhole(CameraModel):
    fx: float = 300.0
    fy: float = 300.0
    cx: float = 200.0
    cy: float = 200.0
    width: int = 0
    height: int = 0
    fov_min_deg: float = 0.0
    fov_max_deg: float = 180.0

    kind = "pinhole"

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidParameter(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.width <= 0:
            object.__setattr__(self, "width", int(round(2.0 * self.cx)))
        if self.height <= 0:
            object.__setattr__(self, "height", int(round(2.0 * self.cy)))
        if self.width <= 0 or self.height <= 0:
            raise InvalidParameter(f"image size must be positive, got {self.width}x{self.height}")
        self._check_fov()

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    def _project(self, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ok = b[:, 2] > MEI_DENOM_EPS
        z = np.where(ok, b[:, 2], 1.0)
        pixels = np.stack([self.fx * b[:, 0] / z + self.cx, self.fy * b[:, 1] / z + self.cy], axis=1)
        return pixels, ok

    def _unproject(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        rays = np.stack([(p[:, 0] - self.cx) / self.fx, (p[:, 1] - self.cy) / self.fy, np.ones(len(p))], axis=1)
        return normalize_rows(rays), np.ones(len(p), dtype=bool)


@functools.lru_cache(maxsize=8)
def pixel_bearings(model: CameraModel) -> Tuple[np.ndarray, np.ndarray]:
    """Bearings ``(H, W, 3)`` of every pixel centre and their validity ``(H, W)``.

    Cached per camera; callers must treat the arrays as read-only.
    """
    width, height = model.size
    xs, ys = np.meshgrid(np.arange(width, dtype=float), np.arange(height, dtype=float))
    pixels = np.stack([xs.ravel(), ys.ravel()], axis=1)
    bearings, ok = model.unproject_many(pixels)
    bearings = np.where(ok[:, None], bearings, 0.0).reshape(height, width, 3)
    valid = ok.reshape(height, width)
    bearings.setflags(write=False)
    valid.setflags(write=False)
    logger.debug("bearing map for %s %dx%d: %d valid pixels", model.kind, width, height, int(ok.sum()))
    return bearings, valid


# ---------------------------------------------------------------------------
# config parsing


class _Schema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fov_deg: Optional[Tuple[float, float]] = None


class EquirectSchema(_Schema):
    model: Literal["equirectangular"]
    width: int
    height: int


class MeiSchema(_Schema):
    model: Literal["mei"]
    xi: float
    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    width: Optional[int] = None
    height: Optional[int] = None


class ScaramuzzaSchema(_Schema):
    model: Literal["scaramuzza"]
    a: List[float] = Field(min_length=5, max_length=5)
    cx: float
    cy: float
    c: float = 1.0
    d: float = 0.0
    e: float = 0.0
    width: int
    height: int


class PinholeSchema(_Schema):
    model: Literal["pinhole"]
    fx: float
    fy: float
    cx: float
    cy: float
    width: Optional[int] = None
    height: Optional[int] = None


class CameraConfig(BaseModel):
    camera: Union[EquirectSchema, MeiSchema, ScaramuzzaSchema, PinholeSchema] = Field(discriminator="model")


_DEFAULT_FOV = {
    "equirectangular": (0.0, 180.0),
    "pinhole": (0.0, 180.0),
    "mei": (0.0, 120.0),
    "scaramuzza": (0.0, 120.0),
}


def model_from_dict(data: dict) -> CameraModel:
    if not isinstance(data, dict):
        raise ParseError("camera config must be a JSON object")
    if "model" not in data:
        raise ParseError("camera config is missing the 'model' key")
    try:
        schema = CameraConfig.model_validate({"camera": data}).camera
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ())[1:]) or "model"
        raise ParseError(f"camera config field '{where}': {first.get('msg')}") from exc

    fields = schema.model_dump(exclude={"model", "fov_deg"}, exclude_none=True)
    fov_min, fov_max = schema.fov_deg or _DEFAULT_FOV[schema.model]
    fields.update(fov_min_deg=float(fov_min), fov_max_deg=float(fov_max))
    if schema.model == "equirectangular":
        return Equirectangular(**fields)
    if schema.model == "mei":
        return UnifiedMei(**fields)
    if schema.model == "scaramuzza":
        fields["a"] = tuple(fields["a"])
        return Scaramuzza(**fields)
    return Pinhole(**fields)


def load_model(config_text: str) -> CameraModel:
    """Build a camera from its JSON description."""
    try:
        data = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"camera config is not valid JSON: {exc}") from exc
    model = model_from_dict(data)
    logger.debug("loaded %s camera %s", model.kind, model.size)
    return model


def model_to_dict(model: CameraModel) -> dict:
    data: dict = {"model": model.kind}
    if isinstance(model, Equirectangular):
        data.update(width=model.width, height=model.height)
    elif isinstance(model, UnifiedMei):
        data.update(
            xi=model.xi, fx=model.fx, fy=model.fy, cx=model.cx, cy=model.cy,
            k1=model.k1, k2=model.k2, p1=model.p1, p2=model.p2,
            width=model.width, height=model.height,
        )
    elif isinstance(model, Scaramuzza):
        data.update(
            a=list(model.a), cx=model.cx, cy=model.cy, c=model.c, d=model.d, e=model.e,
            width=model.width, height=model.height,
        )
    elif isinstance(model, Pinhole):
        data.update(fx=model.fx, fy=model.fy, cx=model.cx, cy=model.cy, width=model.width, height=model.height)
    data["fov_deg"] = [model.fov_min_deg, model.fov_max_deg]
    return data


# module-level spellings used throughout the pipeline
def project(model: CameraModel, bearing: np.ndarray) -> np.ndarray:
    return model.project(bearing)


def unproject(model: CameraModel, pixel: np.ndarray) -> np.ndarray:
    return model.unproject(pixel)


def is_valid_bearing(model: CameraModel, bearing: np.ndarray) -> bool:
    return model.is_valid_bearing(bearing)


def is_valid_pixel(model: CameraModel, pixel: np.ndarray) -> bool:
    return model.is_valid_pixel(pixel)


__all__ = [
    "CameraConfig",
    "CameraModel",
    "Equirectangular",
    "Pinhole",
    "Scaramuzza",
    "UnifiedMei",
    "is_valid_bearing",
    "is_valid_pixel",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "normalize_rows",
    "pixel_bearings",
    "polar_angle",
    "project",
    "unproject",
]
