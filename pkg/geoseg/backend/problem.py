"""Bundle-adjustment problem container, its text format and the solve report.

Problem files are UTF-8 text split into sections. A section starts with a line
holding only its name; blank lines and ``#`` comments are ignored::

    POSES
    # id qw qx qy qz tx ty tz fixed_flags
    0 1 0 0 0 0 0 0 111111
    POINTS
    # id host_frame bx by bz lambda
    LINES
    # id psi1 psi2 psi3 phi
    POINT_OBS
    # frame point bx by bz [weight]
    LINE_OBS
    # frame line bsx bsy bsz bex bey bez [weight]
    GT
    # id qw qx qy qz tx ty tz

``fixed_flags`` is six ``0``/``1`` characters for ``[rx ry rz tx ty tz]``.
Ids inside a section must be exactly ``0..N-1`` (in any order).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..errors import InvalidParameter, NonConvergence, ParseError
from ..geometry.lines import LineObservation, OrthonormalLine, Pose

SECTIONS = ("POSES", "POINTS", "LINES", "POINT_OBS", "LINE_OBS", "GT")
FULLY_FIXED = np.ones(6, dtype=bool)
FREE = np.zeros(6, dtype=bool)


def _unit(v: Sequence[float]) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(3)
    norm = float(np.linalg.norm(arr))
    if not np.isfinite(norm) or norm < 1e-12:
        raise InvalidParameter("bearing must be a non-zero finite vector")
    return arr / norm


@dataclass(frozen=True, eq=False)
class PointFeature:
    """Point stored as inverse distance along its first-observation bearing."""

    host_frame: int
    host_bearing: np.ndarray
    lam: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "host_bearing", _unit(self.host_bearing))
        lam = float(self.lam)
        if not np.isfinite(lam) or lam <= 0:
            raise InvalidParameter(f"inverse distance must be positive, got {lam}")
        object.__setattr__(self, "lam", lam)

    def world_point(self, host: Pose) -> np.ndarray:
        return host.apply(self.host_bearing / self.lam)


@dataclass(frozen=True, eq=False)
class PointObservation:
    frame_id: int
    point_id: int
    bearing: np.ndarray
    weight: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "bearing", _unit(self.bearing))
        if not self.weight > 0:
            raise InvalidParameter(f"observation weight must be positive, got {self.weight}")


@dataclass(frozen=True, eq=False)
class LineMeasurement:
    """A line observation together with the index of the line it measures."""

    line_id: int
    obs: LineObservation
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.weight > 0:
            raise InvalidParameter(f"observation weight must be positive, got {self.weight}")

    @property
    def frame_id(self) -> int:
        return self.obs.frame_id


@dataclass(eq=False)
class BaProblem:
    poses: List[Pose]
    points: List[PointFeature] = field(default_factory=list)
    lines: List[OrthonormalLine] = field(default_factory=list)
    point_obs: List[PointObservation] = field(default_factory=list)
    line_obs: List[LineMeasurement] = field(default_factory=list)
    fixed: Optional[np.ndarray] = None  # (P, 6) bool, [rx ry rz tx ty tz]
    gt_poses: Optional[List[Pose]] = None

    def __post_init__(self) -> None:
        if self.fixed is None:
            fixed = np.zeros((len(self.poses), 6), dtype=bool)
            if len(self.poses):
                fixed[0] = True
            self.fixed = fixed
        else:
            self.fixed = np.asarray(self.fixed, dtype=bool).reshape(len(self.poses), 6).copy()

    def is_fully_fixed(self, i: int) -> bool:
        return bool(np.all(self.fixed[i]))  # type: ignore[index]

    def validate(self) -> None:
        n_poses = len(self.poses)
        if n_poses == 0:
            raise InvalidParameter("problem has no poses")
        if not any(self.is_fully_fixed(i) for i in range(n_poses)):
            raise InvalidParameter("at least one pose must be fully fixed to remove the gauge freedom")
        for k, feat in enumerate(self.points):
            if not 0 <= feat.host_frame < n_poses:
                raise InvalidParameter(f"point {k} references missing host frame {feat.host_frame}")
        for obs in self.point_obs:
            if not 0 <= obs.frame_id < n_poses:
                raise InvalidParameter(f"point observation references missing frame {obs.frame_id}")
            if not 0 <= obs.point_id < len(self.points):
                raise InvalidParameter(f"point observation references missing point {obs.point_id}")
        for meas in self.line_obs:
            if not 0 <= meas.frame_id < n_poses:
                raise InvalidParameter(f"line observation references missing frame {meas.frame_id}")
            if not 0 <= meas.line_id < len(self.lines):
                raise InvalidParameter(f"line observation references missing line {meas.line_id}")
        if self.gt_poses is not None and len(self.gt_poses) != n_poses:
            raise InvalidParameter(f"GT has {len(self.gt_poses)} poses, problem has {n_poses}")

    def copy_with(
        self,
        poses: Optional[List[Pose]] = None,
        points: Optional[List[PointFeature]] = None,
        lines: Optional[List[OrthonormalLine]] = None,
    ) -> "BaProblem":
        return BaProblem(
            poses=list(self.poses if poses is None else poses),
            points=list(self.points if points is None else points),
            lines=list(self.lines if lines is None else lines),
            point_obs=list(self.point_obs),
            line_obs=list(self.line_obs),
            fixed=self.fixed.copy(),  # type: ignore[union-attr]
            gt_poses=None if self.gt_poses is None else list(self.gt_poses),
        )


class IterationRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    iteration: int
    cost: float
    mu: float
    accepted: bool
    step_norm: float


class SolveReport(BaseModel):
    """JSON-serialisable outcome of one solve."""

    iterations: int
    initial_cost: float
    final_cost: float
    costs: List[float]
    gradient_norm: float
    termination: str
    converged: bool
    n_residuals: int
    n_params: int
    history: List[IterationRecord] = []
    ate: Optional[float] = None
    ate_aligned: Optional[float] = None

    def raise_for_status(self) -> None:
        if not self.converged:
            raise NonConvergence(
                f"solver stopped after {self.iterations} iterations ({self.termination}); "
                f"gradient norm {self.gradient_norm:.3e}"
            )

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


def _fields(line: str, lineno: int, count: int, section: str, optional: int = 0) -> List[str]:
    parts = line.split()
    if not count <= len(parts) <= count + optional:
        raise ParseError(f"line {lineno}: {section} rows need {count} fields, got {len(parts)}")
    return parts


def _floats(parts: Iterable[str], lineno: int) -> List[float]:
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"line {lineno}: {exc}") from exc
    if not all(np.isfinite(values)):
        raise ParseError(f"line {lineno}: non-finite value")
    return values


def _int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise ParseError(f"line {lineno}: expected an integer, got {token!r}") from exc


def _ordered(rows: Dict[int, object], section: str) -> List[object]:
    if sorted(rows) != list(range(len(rows))):
        raise ParseError(f"{section} ids must be 0..{len(rows) - 1}")
    return [rows[i] for i in range(len(rows))]


def _flags(token: str, lineno: int) -> np.ndarray:
    if len(token) != 6 or set(token) - {"0", "1"}:
        raise ParseError(f"line {lineno}: fixed_flags must be six 0/1 characters, got {token!r}")
    return np.array([c == "1" for c in token], dtype=bool)


def read_problem(text: str) -> BaProblem:
    """Parse the problem text format; structural errors raise :class:`ParseError`."""
    rows: Dict[str, List[Tuple[int, str]]] = {name: [] for name in SECTIONS}
    section: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in SECTIONS:
            section = line
            continue
        if section is None:
            raise ParseError(f"line {lineno}: data before the first section header")
        rows[section].append((lineno, line))
    if not rows["POSES"]:
        raise ParseError("problem has no POSES section")

    try:
        poses: Dict[int, object] = {}
        flags: Dict[int, object] = {}
        for lineno, line in rows["POSES"]:
            parts = _fields(line, lineno, 9, "POSES")
            idx = _int(parts[0], lineno)
            values = _floats(parts[1:8], lineno)
            poses[idx] = Pose(np.array(values[:4]), np.array(values[4:]))
            flags[idx] = _flags(parts[8], lineno)
        pose_list = _ordered(poses, "POSES")
        fixed = np.stack(_ordered(flags, "POSES"))

        points: Dict[int, object] = {}
        for lineno, line in rows["POINTS"]:
            parts = _fields(line, lineno, 6, "POINTS")
            values = _floats(parts[2:], lineno)
            points[_int(parts[0], lineno)] = PointFeature(_int(parts[1], lineno), np.array(values[:3]), values[3])

        lines: Dict[int, object] = {}
        for lineno, line in rows["LINES"]:
            parts = _fields(line, lineno, 5, "LINES")
            values = _floats(parts[1:], lineno)
            lines[_int(parts[0], lineno)] = OrthonormalLine(np.array(values[:3]), values[3])

        point_obs = []
        for lineno, line in rows["POINT_OBS"]:
            parts = _fields(line, lineno, 5, "POINT_OBS", optional=1)
            values = _floats(parts[2:], lineno)
            weight = values[3] if len(values) > 3 else 1.0
            point_obs.append(
                PointObservation(_int(parts[0], lineno), _int(parts[1], lineno), np.array(values[:3]), weight)
            )

        line_obs = []
        for lineno, line in rows["LINE_OBS"]:
            parts = _fields(line, lineno, 8, "LINE_OBS", optional=1)
            values = _floats(parts[2:], lineno)
            weight = values[6] if len(values) > 6 else 1.0
            obs = LineObservation(_int(parts[0], lineno), np.array(values[:3]), np.array(values[3:6]))
            line_obs.append(LineMeasurement(_int(parts[1], lineno), obs, weight))

        gt: Dict[int, object] = {}
        for lineno, line in rows["GT"]:
            parts = _fields(line, lineno, 8, "GT")
            values = _floats(parts[1:], lineno)
            gt[_int(parts[0], lineno)] = Pose(np.array(values[:4]), np.array(values[4:]))
    except InvalidParameter as exc:
        raise ParseError(str(exc)) from exc

    problem = BaProblem(
        poses=pose_list,  # type: ignore[arg-type]
        points=_ordered(points, "POINTS"),  # type: ignore[arg-type]
        lines=_ordered(lines, "LINES"),  # type: ignore[arg-type]
        point_obs=point_obs,
        line_obs=line_obs,
        fixed=fixed,
        gt_poses=_ordered(gt, "GT") if gt else None,  # type: ignore[arg-type]
    )
    problem.validate()
    return problem


def _num(value: float) -> str:
    return repr(float(value))


def _row(*items: object) -> str:
    return " ".join(_num(x) if isinstance(x, (float, np.floating)) else str(x) for x in items)


def write_problem(problem: BaProblem, gt: Optional[Sequence[Pose]] = None) -> str:
    """Serialise ``problem`` in the format :func:`read_problem` parses."""
    out: List[str] = ["POSES", "# id qw qx qy qz tx ty tz fixed_flags"]
    for i, pose in enumerate(problem.poses):
        flag_str = "".join("1" if f else "0" for f in problem.fixed[i])  # type: ignore[index]
        out.append(_row(i, *map(float, pose.q), *map(float, pose.t), flag_str))
    out += ["POINTS", "# id host_frame bx by bz lambda"]
    for i, feat in enumerate(problem.points):
        out.append(_row(i, feat.host_frame, *map(float, feat.host_bearing), feat.lam))
    out += ["LINES", "# id psi1 psi2 psi3 phi"]
    for i, line in enumerate(problem.lines):
        out.append(_row(i, *map(float, line.psi), line.phi))
    out += ["POINT_OBS", "# frame point bx by bz [weight]"]
    for obs in problem.point_obs:
        extra = [] if obs.weight == 1.0 else [float(obs.weight)]
        out.append(_row(obs.frame_id, obs.point_id, *map(float, obs.bearing), *extra))
    out += ["LINE_OBS", "# frame line bsx bsy bsz bex bey bez [weight]"]
    for meas in problem.line_obs:
        extra = [] if meas.weight == 1.0 else [float(meas.weight)]
        out.append(_row(meas.frame_id, meas.line_id, *map(float, meas.obs.p_s), *map(float, meas.obs.p_e), *extra))
    gt_poses = gt if gt is not None else problem.gt_poses
    if gt_poses:
        out += ["GT", "# id qw qx qy qz tx ty tz"]
        for i, pose in enumerate(gt_poses):
            out.append(_row(i, *map(float, pose.q), *map(float, pose.t)))
    return "\n".join(out) + "\n"


__all__ = [
    "BaProblem",
    "FREE",
    "FULLY_FIXED",
    "IterationRecord",
    "LineMeasurement",
    "PointFeature",
    "PointObservation",
    "SolveReport",
    "read_problem",
    "write_problem",
]
