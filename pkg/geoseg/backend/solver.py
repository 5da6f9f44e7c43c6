"""Robust Levenberg-Marquardt over poses, inverse-distance points and lines.

The cost is ``sum_i w_i * rho(|r_i|^2)`` with ``rho`` the Huber function on the
squared norm (or the identity when ``robust`` is off). Each iteration linearizes
every residual block, reweights it with ``rho'`` and solves the damped dense
normal equations. Damping follows Nielsen's rule.

State increments:

* poses: ``R <- R Exp(dtheta)``, ``t <- t + dt`` over the free components only;
* points: ``lambda <- lambda + dlambda``;
* lines: ``U <- U R_zyx(dpsi)``, ``phi <- phi + dphi``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..config import SolveOptions
from ..errors import DegenerateLine, PointAtCameraCenter, SingularNormalEquations
from ..geometry.lines import (
    OrthonormalLine,
    Pose,
    line_residual_jacobian,
    line_residual_signed,
    orthonormal_to_plucker,
    skew,
)
from .problem import BaProblem, PointFeature, SolveReport

logger = logging.getLogger(__name__)

CENTER_EPS = 1e-12
DAMPING_FLOOR = 1e-9


def huber(r2: float, delta: float) -> Tuple[float, float]:
    """Huber cost on a squared norm and its derivative w.r.t. ``r2``."""
    if r2 < 0:
        raise ValueError(f"r2 must be non-negative, got {r2}")
    if math.isinf(delta):
        return float(r2), 1.0
    norm = math.sqrt(r2)
    if norm <= delta:
        return float(r2), 1.0
    return 2.0 * delta * norm - delta * delta, delta / norm


def tangent_basis(b: np.ndarray) -> np.ndarray:
    """Rows ``b1, b2`` spanning the tangent plane at unit ``b``."""
    b = np.asarray(b, dtype=float)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(b)))] = 1.0
    b1 = np.cross(axis, b)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(b, b1)
    return np.vstack([b1, b2])


def _point_in_target(pose_host: Pose, pose_target: Pose, feat: PointFeature) -> np.ndarray:
    world = pose_host.apply(feat.host_bearing / feat.lam)
    return pose_target.to_camera(world)


def point_residual(pose_host: Pose, pose_target: Pose, feat: PointFeature, observed: np.ndarray) -> np.ndarray:
    """Tangent-plane difference between the predicted and the observed bearing."""
    x_c = _point_in_target(pose_host, pose_target, feat)
    norm = float(np.linalg.norm(x_c))
    if norm < CENTER_EPS:
        raise PointAtCameraCenter("point coincides with the observing camera centre")
    obs = np.asarray(observed, dtype=float)
    obs = obs / np.linalg.norm(obs)
    return tangent_basis(obs) @ (x_c / norm - obs)


def point_residual_jacobian(
    pose_host: Pose, pose_target: Pose, feat: PointFeature, observed: np.ndarray
) -> np.ndarray:
    """2x13 Jacobian over ``[host dtheta, host dt, target dtheta, target dt, dlambda]``."""
    f = feat.host_bearing / feat.lam
    world = pose_host.apply(f)
    x_c = pose_target.to_camera(world)
    norm = float(np.linalg.norm(x_c))
    if norm < CENTER_EPS:
        raise PointAtCameraCenter("point coincides with the observing camera centre")
    b_hat = x_c / norm
    obs = np.asarray(observed, dtype=float)
    B = tangent_basis(obs / np.linalg.norm(obs))
    dr_dxc = B @ ((np.eye(3) - np.outer(b_hat, b_hat)) / norm)
    Rt_T = pose_target.R.T
    J = np.zeros((2, 13))
    J[:, 0:3] = dr_dxc @ Rt_T @ (-pose_host.R @ skew(f))
    J[:, 3:6] = dr_dxc @ Rt_T
    J[:, 6:9] = dr_dxc @ skew(x_c)
    J[:, 9:12] = -dr_dxc @ Rt_T
    J[:, 12] = dr_dxc @ Rt_T @ (-pose_host.R @ feat.host_bearing / feat.lam**2)
    return J


@dataclass
class _Layout:
    """Column indices of every free parameter in the dense system."""

    pose_cols: List[np.ndarray]  # per pose, 6 entries, -1 where fixed
    point_col0: int
    line_col0: int
    n_params: int

    @classmethod
    def build(cls, problem: BaProblem) -> "_Layout":
        col = 0
        pose_cols = []
        for flags in problem.fixed:  # type: ignore[union-attr]
            cols = np.full(6, -1, dtype=int)
            for j in range(6):
                if not flags[j]:
                    cols[j] = col
                    col += 1
            pose_cols.append(cols)
        point_col0 = col
        col += len(problem.points)
        line_col0 = col
        col += 4 * len(problem.lines)
        return cls(pose_cols, point_col0, line_col0, col)


@dataclass
class _State:
    poses: List[Pose]
    points: List[PointFeature]
    lines: List[OrthonormalLine]


def _residual_blocks(problem: BaProblem, state: _State):
    """Yield ``(kind, index, residual)`` in a fixed order."""
    for k, obs in enumerate(problem.point_obs):
        feat = state.points[obs.point_id]
        r = point_residual(state.poses[feat.host_frame], state.poses[obs.frame_id], feat, obs.bearing)
        yield "point", k, r
    plucker = [orthonormal_to_plucker(line) for line in state.lines]
    for k, meas in enumerate(problem.line_obs):
        r = line_residual_signed(plucker[meas.line_id], state.poses[meas.frame_id], meas.obs)
        yield "line", k, r


def _robust(r2: float, delta: float, robust: bool) -> Tuple[float, float]:
    return huber(r2, delta) if robust else (r2, 1.0)


def total_cost(problem: BaProblem, state: _State, opts: SolveOptions) -> float:
    cost = 0.0
    for kind, k, r in _residual_blocks(problem, state):
        if kind == "point":
            delta, weight = opts.huber_delta_point, problem.point_obs[k].weight
        else:
            delta, weight = opts.huber_delta_line, problem.line_obs[k].weight
        cost += weight * _robust(float(r @ r), delta, opts.robust)[0]
    return cost


def _point_block(problem: BaProblem, state: _State, layout: _Layout, k: int):
    obs = problem.point_obs[k]
    feat = state.points[obs.point_id]
    host, target = state.poses[feat.host_frame], state.poses[obs.frame_id]
    r = point_residual(host, target, feat, obs.bearing)
    J_full = point_residual_jacobian(host, target, feat, obs.bearing)
    cols: dict = {}
    for offset, pose_id in ((0, feat.host_frame), (6, obs.frame_id)):
        for j, c in enumerate(layout.pose_cols[pose_id]):
            if c >= 0:
                cols[c] = cols.get(c, 0.0) + J_full[:, offset + j]
    cols[layout.point_col0 + obs.point_id] = J_full[:, 12]
    idx = np.array(sorted(cols), dtype=int)
    J = np.column_stack([cols[c] for c in idx]) if len(idx) else np.zeros((2, 0))
    return r, J, idx, obs.weight, "point"


def _line_block(problem: BaProblem, state: _State, layout: _Layout, plucker, k: int):
    meas = problem.line_obs[k]
    pose = state.poses[meas.frame_id]
    line = state.lines[meas.line_id]
    r = line_residual_signed(plucker[meas.line_id], pose, meas.obs)
    J_full = line_residual_jacobian(line, pose, meas.obs, mode="local")
    pose_cols = layout.pose_cols[meas.frame_id]
    keep = [j for j in range(6) if pose_cols[j] >= 0]
    idx = np.concatenate([pose_cols[keep], layout.line_col0 + 4 * meas.line_id + np.arange(4)]).astype(int)
    J = np.hstack([J_full[:, keep], J_full[:, 6:]])
    return r, J, idx, meas.weight, "line"


def _linearize(problem: BaProblem, state: _State, layout: _Layout, opts: SolveOptions):
    plucker = [orthonormal_to_plucker(line) for line in state.lines]
    tasks = [("point", k) for k in range(len(problem.point_obs))]
    tasks += [("line", k) for k in range(len(problem.line_obs))]

    def run(task):
        kind, k = task
        if kind == "point":
            return _point_block(problem, state, layout, k)
        return _line_block(problem, state, layout, plucker, k)

    if opts.threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            blocks = list(pool.map(run, tasks))
    else:
        blocks = [run(t) for t in tasks]

    n = layout.n_params
    H = np.zeros((n, n))
    g = np.zeros(n)
    cost = 0.0
    for r, J, idx, weight, kind in blocks:
        delta = opts.huber_delta_point if kind == "point" else opts.huber_delta_line
        rho, drho = _robust(float(r @ r), delta, opts.robust)
        cost += weight * rho
        if len(idx) == 0:
            continue
        w = weight * drho
        H[np.ix_(idx, idx)] += w * (J.T @ J)
        g[idx] += w * (J.T @ r)
    return cost, H, g


def _apply_step(problem: BaProblem, state: _State, layout: _Layout, step: np.ndarray) -> _State:
    poses = []
    for i, pose in enumerate(state.poses):
        cols = layout.pose_cols[i]
        if np.all(cols < 0):
            poses.append(pose)
            continue
        inc = np.zeros(6)
        free = cols >= 0
        inc[free] = step[cols[free]]
        if np.all(cols[:3] < 0):
            # rotation frozen: keep the quaternion bits
            poses.append(Pose(pose.q, pose.t + inc[3:]))
        else:
            poses.append(pose.retract(inc[:3], inc[3:]))
    points = []
    for k, feat in enumerate(state.points):
        lam = feat.lam + float(step[layout.point_col0 + k])
        if not lam > 0:
            raise PointAtCameraCenter(f"inverse distance of point {k} left the positive range")
        points.append(PointFeature(feat.host_frame, feat.host_bearing, lam))
    lines = []
    for k, line in enumerate(state.lines):
        c0 = layout.line_col0 + 4 * k
        lines.append(line.retract(step[c0:c0 + 4]))
    return _State(poses, points, lines)


def _sorted_problem(problem: BaProblem) -> BaProblem:
    sorted_problem = problem.copy_with()
    sorted_problem.point_obs = sorted(problem.point_obs, key=lambda o: (o.frame_id, o.point_id))
    sorted_problem.line_obs = sorted(problem.line_obs, key=lambda m: (m.frame_id, m.line_id))
    return sorted_problem


def solve(problem: BaProblem, opts: SolveOptions = SolveOptions()) -> Tuple[BaProblem, SolveReport]:
    """Refine every free parameter of ``problem``; returns the optimized copy and a report."""
    problem.validate()
    work = _sorted_problem(problem)
    layout = _Layout.build(work)
    state = _State(list(work.poses), list(work.points), list(work.lines))
    n_residuals = 2 * (len(work.point_obs) + len(work.line_obs))

    mu = opts.lm_lambda_init
    nu = 2.0
    cost, H, g = _linearize(work, state, layout, opts)
    initial_cost = cost
    costs = [cost]
    history = []
    grad_norm = float(np.max(np.abs(g))) if g.size else 0.0
    termination = "max_iters"
    converged = False
    iterations = 0

    for iteration in range(1, opts.max_iters + 1):
        if layout.n_params == 0 or grad_norm < opts.grad_tol:
            termination, converged = "gradient", True
            break
        iterations = iteration
        D = np.diag(np.diag(H) + DAMPING_FLOOR)
        accepted = False
        stalled = False
        while True:
            try:
                factor = linalg.cho_factor(H + mu * D, check_finite=True)
                step = -linalg.cho_solve(factor, g)
            except (linalg.LinAlgError, ValueError):
                mu *= nu
                nu *= 2.0
                if mu > opts.lm_lambda_max:
                    raise SingularNormalEquations(
                        f"normal equations stay singular up to damping {opts.lm_lambda_max:.1e}"
                    )
                continue
            predicted = float(step @ H @ step + 2.0 * mu * step @ D @ step)
            try:
                candidate = _apply_step(work, state, layout, step)
                new_cost = total_cost(work, candidate, opts)
            except (PointAtCameraCenter, DegenerateLine):
                new_cost = math.inf
            if new_cost < cost and predicted > 0:
                gain = (cost - new_cost) / predicted
                mu *= max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)
                nu = 2.0
                accepted = True
                break
            mu *= nu
            nu *= 2.0
            if mu > opts.lm_lambda_max:
                stalled = True
                break
        step_norm = float(np.linalg.norm(step)) if accepted else 0.0
        if stalled:
            history.append({"iteration": iteration, "cost": cost, "mu": mu, "accepted": False, "step_norm": 0.0})
            # no damping gives a decrease; only a vanishing gradient makes that an optimum
            termination, converged = "stalled", grad_norm < opts.grad_tol
            break
        decrease = cost - new_cost
        state = candidate
        previous = cost
        cost, H, g = _linearize(work, state, layout, opts)
        costs.append(cost)
        grad_norm = float(np.max(np.abs(g))) if g.size else 0.0
        history.append({"iteration": iteration, "cost": cost, "mu": mu, "accepted": True, "step_norm": step_norm})
        logger.debug("LM %d: cost %.6e mu %.3e |step| %.3e", iteration, cost, mu, step_norm)
        if decrease <= opts.rel_cost_tol * previous:
            termination, converged = "cost", True
            break
    else:
        if grad_norm < opts.grad_tol:
            termination, converged = "gradient", True

    result = work.copy_with(poses=state.poses, points=state.points, lines=state.lines)
    result.point_obs = list(problem.point_obs)
    result.line_obs = list(problem.line_obs)
    ate = ate_aligned = None
    if problem.gt_poses is not None:
        ate = absolute_trajectory_error(result.poses, problem.gt_poses)
        if len(problem.poses) >= 3:
            ate_aligned = absolute_trajectory_error(result.poses, problem.gt_poses, align=True)
    report = SolveReport(
        iterations=iterations,
        initial_cost=initial_cost,
        final_cost=cost,
        costs=costs,
        gradient_norm=grad_norm,
        termination=termination,
        converged=converged,
        n_residuals=n_residuals,
        n_params=layout.n_params,
        history=history,
        ate=ate,
        ate_aligned=ate_aligned,
    )
    logger.debug("solve: %s after %d iterations, cost %.6e -> %.6e", termination, iterations, initial_cost, cost)
    return result, report


def umeyama(src: np.ndarray, dst: np.ndarray, with_scale: bool = True) -> Tuple[float, np.ndarray, np.ndarray]:
    """Similarity ``(s, R, t)`` minimizing ``|dst - (s R src + t)|``."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    xs, xd = src - mu_s, dst - mu_d
    cov = xd.T @ xs / len(src)
    U, S, Vt = linalg.svd(cov)
    sign = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        sign[2, 2] = -1.0
    R = U @ sign @ Vt
    var_s = float(np.mean(np.sum(xs**2, axis=1)))
    s = float(np.trace(np.diag(S) @ sign) / var_s) if with_scale and var_s > 0 else 1.0
    t = mu_d - s * R @ mu_s
    return s, R, t


def absolute_trajectory_error(
    estimate: Sequence[Pose], reference: Sequence[Pose], align: bool = False
) -> float:
    """RMS of camera-centre differences, optionally after similarity alignment."""
    if len(estimate) != len(reference):
        raise ValueError(f"trajectory lengths differ: {len(estimate)} vs {len(reference)}")
    if not estimate:
        return 0.0
    est = np.array([p.t for p in estimate])
    ref = np.array([p.t for p in reference])
    if align:
        s, R, t = umeyama(est, ref)
        est = s * est @ R.T + t
    return float(np.sqrt(np.mean(np.sum((est - ref) ** 2, axis=1))))


def problem_cost(problem: BaProblem, opts: SolveOptions = SolveOptions()) -> float:
    return total_cost(problem, _State(list(problem.poses), list(problem.points), list(problem.lines)), opts)


__all__ = [
    "absolute_trajectory_error",
    "huber",
    "point_residual",
    "point_residual_jacobian",
    "problem_cost",
    "solve",
    "tangent_basis",
    "umeyama",
]
