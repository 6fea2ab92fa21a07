"""Head-pose recovery from 2D landmarks by damped nonlinear least squares.

Given N model points, their pixel observations, and camera intrinsics,
estimate the rigid transform placing the model in the camera frame.
The solver is Levenberg-Marquardt over a 6-vector increment
(axis-angle rotation, translation) applied left-multiplicatively,
seeded by a weak-perspective orthographic factorization.

Image points are expected to be undistorted already (see
camera.undistort_points); the objective is an ideal pinhole projection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics
from .geometry import RigidTransform

__all__ = [
    "PnPProblem",
    "PnPSolution",
    "apply_increment",
    "jacobian",
    "reprojection_residuals",
    "solve_pnp",
]

_MIN_POINTS = 6
_LM_LAMBDA_INIT = 1e-3
_LM_LAMBDA_MAX = 1e15
_LM_MAX_ITER = 100
_LM_REL_DECREASE_TOL = 1e-10
_LM_STEP_TOL = 1e-10
_FALLBACK_DEPTH_MM = 600.0


@dataclass(frozen=True)
class PnPProblem:
    """Point correspondences for one pose estimate.

    model_points: (N, 3) object-frame points, N >= 6, not all collinear.
    image_points: (N, 2) undistorted pixels, same order as model_points.
    """

    model_points: np.ndarray
    image_points: np.ndarray
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        mp = np.asarray(self.model_points, dtype=float)
        ip = np.asarray(self.image_points, dtype=float)
        if mp.ndim != 2 or mp.shape[1] != 3:
            raise ValueError(f"model_points must be (N, 3), got {mp.shape}")
        if ip.shape != (mp.shape[0], 2):
            raise ValueError(f"image_points must be ({mp.shape[0]}, 2), got {ip.shape}")
        if mp.shape[0] < _MIN_POINTS:
            raise ValueError(f"need at least {_MIN_POINTS} points, got {mp.shape[0]}")
        if not (np.all(np.isfinite(mp)) and np.all(np.isfinite(ip))):
            raise ValueError("points must be finite")
        centered = mp - mp.mean(axis=0)
        s = np.linalg.svd(centered, compute_uv=False)
        if s[1] <= 1e-9 * max(1.0, s[0]):
            raise ValueError("model points are collinear; pose is not recoverable")
        object.__setattr__(self, "model_points", mp)
        object.__setattr__(self, "image_points", ip)


@dataclass(frozen=True)
class PnPSolution:
    pose: RigidTransform
    rms_residual: float
    iterations: int
    converged: bool


def _exp_so3(w: np.ndarray) -> np.ndarray:
    """Rodrigues exponential of an axis-angle vector in radians."""
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(w))
    k = np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    if theta < 1e-12:
        return np.eye(3) + k
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * k + b * (k @ k)


def apply_increment(pose: RigidTransform, delta: np.ndarray) -> RigidTransform:
    """Apply a 6-vector update (axis-angle radians, translation mm).

    Rotation composes on the left: R' = exp([w]) R, t' = t + dt.
    """
    delta = np.asarray(delta, dtype=float).reshape(6)
    return RigidTransform(
        _exp_so3(delta[:3]) @ pose.rotation,
        pose.translation + delta[3:],
    )


def reprojection_residuals(pose: RigidTransform, problem: PnPProblem) -> np.ndarray:
    """Per-landmark (du, dv) reprojection residuals, shape (N, 2).

    residual_i = project(T x_i) - observed_i; the least-squares
    objective is the sum of all squared components.
    """
    cam = problem.intrinsics
    pts = problem.model_points @ pose.rotation.T + pose.translation
    z = pts[:, 2]
    if np.any(z <= 0.0):
        bad = int(np.argmax(z <= 0.0))
        raise ValueError(f"landmark {bad} falls behind the camera (z={z[bad]:.6g})")
    pred = np.stack(
        [cam.fx * pts[:, 0] / z + cam.cx, cam.fy * pts[:, 1] / z + cam.cy], axis=1
    )
    return pred - problem.image_points


def jacobian(pose: RigidTransform, problem: PnPProblem) -> np.ndarray:
    """Analytic (2N, 6) Jacobian of the stacked residuals w.r.t. the update.

    Columns 0-2 are the axis-angle increment, 3-5 the translation; rows
    interleave u then v per landmark. For q = R x and p = q + t:
    d(p)/dw = -[q]x, d(p)/dt = I, and the projection block is
    [[fx/z, 0, -fx x/z^2], [0, fy/z, -fy y/z^2]].
    """
    cam = problem.intrinsics
    rx = problem.model_points @ pose.rotation.T
    pts = rx + pose.translation
    n = pts.shape[0]
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    if np.any(z <= 0.0):
        raise ValueError("pose places a model point behind the camera")

    a = cam.fx / z
    c = -cam.fx * x / (z * z)
    b = cam.fy / z
    d = -cam.fy * y / (z * z)
    q0, q1, q2 = rx[:, 0], rx[:, 1], rx[:, 2]
    zero = np.zeros(n)

    j = np.empty((2 * n, 6))
    j[0::2, :3] = np.stack([c * q1, a * q2 - c * q0, -a * q1], axis=1)
    j[1::2, :3] = np.stack([d * q1 - b * q2, -d * q0, b * q0], axis=1)
    j[0::2, 3:] = np.stack([a, zero, c], axis=1)
    j[1::2, 3:] = np.stack([zero, b, d], axis=1)
    return j


def _weak_perspective_init(problem: PnPProblem) -> RigidTransform:
    """Seed pose from an orthographic factorization of the correspondences.

    Centered normalized image coordinates are modeled as (1/depth) times
    the first two rows of R applied to centered model points; the best
    rank-2 orthonormal fit comes from an SVD, the third row from a cross
    product, and the shared depth from the mean singular value.
    """
    cam = problem.intrinsics
    fallback = RigidTransform(np.eye(3), np.array([0.0, 0.0, _FALLBACK_DEPTH_MM]))

    xn = (problem.image_points[:, 0] - cam.cx) / cam.fx
    yn = (problem.image_points[:, 1] - cam.cy) / cam.fy
    img = np.stack([xn, yn], axis=1)
    img_mean = img.mean(axis=0)
    img_c = img - img_mean

    mdl_mean = problem.model_points.mean(axis=0)
    mdl_c = problem.model_points - mdl_mean

    try:
        m, *_ = np.linalg.lstsq(mdl_c, img_c, rcond=None)
        u, sv, vt = np.linalg.svd(m.T, full_matrices=False)
    except np.linalg.LinAlgError:
        return fallback
    scale = float(sv.mean())
    if not math.isfinite(scale) or scale < 1e-9:
        return fallback

    r12 = u @ vt
    r3 = np.cross(r12[0], r12[1])
    r = np.vstack([r12, r3])
    depth = 1.0 / scale
    t = depth * np.array([img_mean[0], img_mean[1], 1.0]) - r @ mdl_mean
    if not np.all(np.isfinite(r)) or not np.all(np.isfinite(t)) or t[2] <= 0:
        return fallback
    return RigidTransform(r, t)


def solve_pnp(problem: PnPProblem, init: RigidTransform = None) -> PnPSolution:
    """Estimate the model-to-camera pose for one set of correspondences.

    Damping starts at 1e-3, divides by 10 on an accepted step and
    multiplies by 10 on a rejected one. The loop stops on a relative
    cost decrease below 1e-10, a step norm below 1e-10, or after 100
    iterations, whichever comes first. Non-convergence returns the best
    iterate with converged False.
    """
    pose = init if init is not None else _weak_perspective_init(problem)

    try:
        r = reprojection_residuals(pose, problem).reshape(-1)
    except ValueError:
        pose = RigidTransform(np.eye(3), np.array([0.0, 0.0, _FALLBACK_DEPTH_MM]))
        r = reprojection_residuals(pose, problem).reshape(-1)
    cost = float(r @ r)

    lam = _LM_LAMBDA_INIT
    converged = False
    iterations = 0
    n = problem.model_points.shape[0]

    while iterations < _LM_MAX_ITER:
        iterations += 1
        j = jacobian(pose, problem)
        g = j.T @ r
        h = j.T @ j
        try:
            delta = np.linalg.solve(h + lam * np.eye(6), -g)
        except np.linalg.LinAlgError:
            delta = None
        if delta is None or not np.all(np.isfinite(delta)):
            lam *= 10.0
            if lam > _LM_LAMBDA_MAX:
                warnings.warn("normal equations degenerate beyond damping recovery")
                break
            continue
        if float(np.linalg.norm(delta)) < _LM_STEP_TOL:
            converged = True
            break

        trial = apply_increment(pose, delta)
        try:
            r_trial = reprojection_residuals(trial, problem).reshape(-1)
            trial_cost = float(r_trial @ r_trial)
        except ValueError:
            trial_cost = math.inf

        if trial_cost < cost:
            rel = (cost - trial_cost) / max(cost, 1e-300)
            pose, r, cost = trial, r_trial, trial_cost
            lam = max(lam / 10.0, 1e-15)
            if rel < _LM_REL_DECREASE_TOL or float(np.linalg.norm(delta)) < _LM_STEP_TOL:
                converged = True
                break
        else:
            lam *= 10.0
            if lam > _LM_LAMBDA_MAX:
                break

    rms = math.sqrt(cost / n)
    return PnPSolution(pose=pose, rms_residual=rms, iterations=iterations, converged=converged)
