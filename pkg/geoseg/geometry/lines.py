"""3D lines and camera poses for the estimation back-end.

Lines are stored in Plücker form ``(n, d)`` with ``n`` the moment (``p x d`` for
any point ``p`` on the line) and ``d`` the direction, scaled so that
``|d| = 1``. The minimal orthonormal form keeps the rotation
``U = [n/|n|, d/|d|, (n x d)/|n x d|]`` as ZYX Euler angles plus the scalar
``phi = atan2(|d|, |n|)``, so the origin-to-line distance is ``cot(phi)``.

Poses map camera coordinates into the world: ``X_w = R X_c + t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import DegenerateGeometry, DegenerateLine, InvalidParameter, LineThroughOrigin

PLANE_MIN_ANGLE_RAD = math.radians(0.5)
RESIDUAL_EPS = 1e-12
EULER_ORDER = "ZYX"

JacobianMode = Literal["local", "euler"]


def skew(v: np.ndarray) -> np.ndarray:
    x, y, z = np.asarray(v, dtype=float).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]]) / 2.0


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform camera -> world; ``q`` is ``(w, x, y, z)``."""

    q: np.ndarray
    t: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=float).reshape(4)
        norm = float(np.linalg.norm(q))
        if not np.isfinite(norm) or norm < 1e-12:
            raise InvalidParameter("pose quaternion must be non-zero")
        # already-unit quaternions keep their exact bits
        if abs(norm - 1.0) > 1e-12:
            q = q / norm
        if q[0] < 0:
            q = -q
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float).reshape(3).copy())
        rot = Rotation.from_quat([q[1], q[2], q[3], q[0]])
        object.__setattr__(self, "_R", rot.as_matrix())

    @property
    def R(self) -> np.ndarray:
        return self._R  # type: ignore[attr-defined]

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_matrix(cls, R: np.ndarray, t: np.ndarray) -> "Pose":
        x, y, z, w = Rotation.from_matrix(np.asarray(R, dtype=float)).as_quat()
        return cls(np.array([w, x, y, z]), t)

    @classmethod
    def from_rotvec(cls, rotvec: np.ndarray, t: np.ndarray) -> "Pose":
        return cls.from_matrix(Rotation.from_rotvec(rotvec).as_matrix(), t)

    def inverse(self) -> "Pose":
        return Pose.from_matrix(self.R.T, -self.R.T @ self.t)

    def compose(self, other: "Pose") -> "Pose":
        return Pose.from_matrix(self.R @ other.R, self.R @ other.t + self.t)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.R.T + self.t

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.t) @ self.R

    def retract(self, dtheta: np.ndarray, dt: np.ndarray) -> "Pose":
        """Right-multiplied rotation increment, additive translation."""
        R = self.R @ Rotation.from_rotvec(np.asarray(dtheta, dtype=float)).as_matrix()
        return Pose.from_matrix(R, self.t + np.asarray(dt, dtype=float))


@dataclass(frozen=True, eq=False)
class PluckerLine:
    n: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        n = np.asarray(self.n, dtype=float).reshape(3)
        d = np.asarray(self.d, dtype=float).reshape(3)
        d_norm = float(np.linalg.norm(d))
        if not np.isfinite(d_norm) or d_norm < 1e-12:
            raise InvalidParameter("line direction must be non-zero")
        if abs(float(np.dot(n, d))) > 1e-9 * max(1.0, float(np.linalg.norm(n))) * d_norm:
            raise InvalidParameter(f"Plücker constraint violated: n.d = {float(np.dot(n, d)):.3e}")
        object.__setattr__(self, "n", n / d_norm)
        object.__setattr__(self, "d", d / d_norm)

    @classmethod
    def from_points(cls, a: np.ndarray, b: np.ndarray) -> "PluckerLine":
        a = np.asarray(a, dtype=float)
        d = np.asarray(b, dtype=float) - a
        return cls(np.cross(a, d), d)

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.n))

    def closest_point(self) -> np.ndarray:
        return np.cross(self.d, self.n)


@dataclass(frozen=True, eq=False)
class OrthonormalLine:
    psi: np.ndarray
    phi: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float).reshape(3).copy())
        object.__setattr__(self, "phi", float(self.phi))

    @property
    def U(self) -> np.ndarray:
        return Rotation.from_euler(EULER_ORDER, self.psi).as_matrix()

    def params(self) -> np.ndarray:
        return np.concatenate([self.psi, [self.phi]])

    @classmethod
    def from_params(cls, params: np.ndarray) -> "OrthonormalLine":
        return cls(params[:3], params[3])

    def retract(self, delta: np.ndarray) -> "OrthonormalLine":
        """``U <- U R_zyx(delta[:3])``, ``phi <- phi + delta[3]``."""
        U = self.U @ Rotation.from_euler(EULER_ORDER, delta[:3]).as_matrix()
        return OrthonormalLine(_euler_from_matrix(U), self.phi + float(delta[3]))


@dataclass(frozen=True, eq=False)
class LineObservation:
    frame_id: int
    p_s: np.ndarray
    p_e: np.ndarray

    def __post_init__(self) -> None:
        p_s = np.asarray(self.p_s, dtype=float).reshape(3)
        p_e = np.asarray(self.p_e, dtype=float).reshape(3)
        p_s = p_s / np.linalg.norm(p_s)
        p_e = p_e / np.linalg.norm(p_e)
        if np.linalg.norm(np.cross(p_s, p_e)) < 1e-9:
            raise InvalidParameter("line observation endpoints are parallel")
        object.__setattr__(self, "p_s", p_s)
        object.__setattr__(self, "p_e", p_e)

    @property
    def plane_normal(self) -> np.ndarray:
        k = np.cross(self.p_s, self.p_e)
        return k / np.linalg.norm(k)


def _euler_from_matrix(U: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return Rotation.from_matrix(U).as_euler(EULER_ORDER)


def plucker_to_orthonormal(line: PluckerLine) -> OrthonormalLine:
    n_norm = float(np.linalg.norm(line.n))
    d_norm = float(np.linalg.norm(line.d))
    if n_norm < 1e-12 * d_norm:
        raise LineThroughOrigin("line passes through the origin; the orthonormal form is undefined")
    u1 = line.n / n_norm
    u2 = line.d / d_norm
    u3 = np.cross(u1, u2)
    U = np.column_stack([u1, u2, u3 / np.linalg.norm(u3)])
    return OrthonormalLine(_euler_from_matrix(U), math.atan2(d_norm, n_norm))


def orthonormal_to_plucker(line: OrthonormalLine) -> PluckerLine:
    U = line.U
    return PluckerLine(math.cos(line.phi) * U[:, 0], math.sin(line.phi) * U[:, 1])


def transform_line(pose: Pose, line: PluckerLine) -> PluckerLine:
    Rd = pose.R @ line.d
    return PluckerLine(pose.R @ line.n + np.cross(pose.t, Rd), Rd)


def _camera_moment(n_w: np.ndarray, d_w: np.ndarray, pose: Pose) -> np.ndarray:
    return pose.R.T @ (n_w - np.cross(pose.t, d_w))


def triangulate_line(obs1: LineObservation, pose1: Pose, obs2: LineObservation, pose2: Pose) -> PluckerLine:
    """Intersect the two back-projected planes through the dual Plücker matrix."""
    planes = []
    for obs, pose in ((obs1, pose1), (obs2, pose2)):
        m = pose.R @ obs.plane_normal
        planes.append(np.concatenate([m, [-float(m @ pose.t)]]))
    pi1, pi2 = planes
    tilt = math.acos(min(1.0, abs(float(pi1[:3] @ pi2[:3]))))
    if tilt < PLANE_MIN_ANGLE_RAD:
        raise DegenerateGeometry(f"observation planes are nearly parallel ({math.degrees(tilt):.3f} deg)")
    dual = np.outer(pi1, pi2) - np.outer(pi2, pi1)
    d = -vee(dual[:3, :3])
    n = -dual[:3, 3]
    return PluckerLine(n, d)


def triangulate_point(b1: np.ndarray, pose1: Pose, b2: np.ndarray, pose2: Pose) -> np.ndarray:
    """Midpoint of the shortest segment between two viewing rays."""
    r1 = pose1.R @ (np.asarray(b1, dtype=float) / np.linalg.norm(b1))
    r2 = pose2.R @ (np.asarray(b2, dtype=float) / np.linalg.norm(b2))
    A = np.column_stack([r1, -r2])
    rhs = pose2.t - pose1.t
    AtA = A.T @ A
    if np.linalg.cond(AtA) > 1e12:
        raise DegenerateGeometry("viewing rays are parallel; the point is not observable")
    s1, s2 = np.linalg.solve(AtA, A.T @ rhs)
    return 0.5 * ((pose1.t + s1 * r1) + (pose2.t + s2 * r2))


def line_residual_signed(line: PluckerLine, pose: Pose, obs: LineObservation) -> np.ndarray:
    n_c = _camera_moment(line.n, line.d, pose)
    norm = float(np.linalg.norm(n_c))
    if norm < RESIDUAL_EPS:
        raise DegenerateLine("line passes through the camera centre")
    return np.array([obs.p_s @ n_c, obs.p_e @ n_c]) / norm


def line_residual(line: PluckerLine, pose: Pose, obs: LineObservation) -> np.ndarray:
    return np.abs(line_residual_signed(line, pose, obs))


def _euler_partials(psi: np.ndarray, mode: JacobianMode) -> list[np.ndarray]:
    """dU/dpsi_j for the three angles in (z, y, x) order."""
    ez, ey, ex = skew([0, 0, 1]), skew([0, 1, 0]), skew([1, 0, 0])
    if mode == "local":
        U = Rotation.from_euler(EULER_ORDER, psi).as_matrix()
        return [U @ ez, U @ ey, U @ ex]
    a, b, c = psi
    Rz = Rotation.from_euler("z", a).as_matrix()
    Ry = Rotation.from_euler("y", b).as_matrix()
    Rx = Rotation.from_euler("x", c).as_matrix()
    return [Rz @ ez @ Ry @ Rx, Rz @ Ry @ ey @ Rx, Rz @ Ry @ Rx @ ex]


def line_residual_jacobian(
    line: Union[PluckerLine, OrthonormalLine],
    pose: Pose,
    obs: LineObservation,
    mode: JacobianMode = "local",
    pose_fixed: bool = False,
) -> np.ndarray:
    """2x10 Jacobian of the signed residual w.r.t. ``[dtheta, dt, dpsi, dphi]``."""
    ortho = line if isinstance(line, OrthonormalLine) else plucker_to_orthonormal(line)
    U = ortho.U
    c, s = math.cos(ortho.phi), math.sin(ortho.phi)
    n_w, d_w = c * U[:, 0], s * U[:, 1]
    R = pose.R
    n_c = _camera_moment(n_w, d_w, pose)
    norm = float(np.linalg.norm(n_c))
    if norm < RESIDUAL_EPS:
        raise DegenerateLine("line passes through the camera centre")
    n_hat = n_c / norm
    J = np.zeros((2, 10))
    dn_w = np.zeros((3, 4))
    dd_w = np.zeros((3, 4))
    for j, dU in enumerate(_euler_partials(ortho.psi, mode)):
        dn_w[:, j] = c * dU[:, 0]
        dd_w[:, j] = s * dU[:, 1]
    dn_w[:, 3] = -s * U[:, 0]
    dd_w[:, 3] = c * U[:, 1]
    dnc_line = R.T @ dn_w - R.T @ skew(pose.t) @ dd_w
    dnc_pose = np.hstack([skew(n_c), R.T @ skew(d_w)])
    for i, p in enumerate((obs.p_s, obs.p_e)):
        r = float(p @ n_hat)
        dr_dnc = (p - r * n_hat) / norm
        if not pose_fixed:
            J[i, :6] = dr_dnc @ dnc_pose
        J[i, 6:] = dr_dnc @ dnc_line
    return J


def line_angle(a: PluckerLine, b: PluckerLine) -> float:
    """Direction difference, sign-agnostic, in radians."""
    return math.acos(min(1.0, abs(float(a.d @ b.d))))


__all__ = [
    "LineObservation",
    "OrthonormalLine",
    "PluckerLine",
    "Pose",
    "line_angle",
    "line_residual",
    "line_residual_jacobian",
    "line_residual_signed",
    "orthonormal_to_plucker",
    "plucker_to_orthonormal",
    "skew",
    "transform_line",
    "triangulate_line",
    "triangulate_point",
    "vee",
]
