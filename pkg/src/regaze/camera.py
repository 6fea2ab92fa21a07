"""Pinhole camera with radial/tangential lens distortion.

Distortion coefficients are stored in the order (k1, k2, p1, p2, k3):
two radial terms, two tangential terms, then the third radial term.
Shorter coefficient vectors are accepted and zero-filled.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = ["CameraIntrinsics", "distort_normalized", "project", "undistort_points"]

_UNDISTORT_MAX_ITER = 20
_UNDISTORT_STEP_TOL = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics; focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    dist: np.ndarray = field(default_factory=lambda: np.zeros(5))

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float).reshape(-1)
        if d.size > 5:
            raise ValueError(f"at most 5 distortion coefficients supported, got {d.size}")
        full = np.zeros(5)
        full[: d.size] = d
        object.__setattr__(self, "dist", full)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def has_distortion(self) -> bool:
        return bool(np.any(self.dist != 0.0))


def distort_normalized(camera: CameraIntrinsics, xy: np.ndarray) -> np.ndarray:
    """Apply the lens model to ideal normalized coordinates (N, 2)."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    k1, k2, p1, p2, k3 = camera.dist
    x, y = xy[:, 0], xy[:, 1]
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return np.stack([xd, yd], axis=1)


def project(camera: CameraIntrinsics, points: np.ndarray) -> np.ndarray:
    """Project camera-frame points to pixels: (3,) -> (2,) or (N, 3) -> (N, 2).

    Every point must be strictly in front of the camera (z > 0).
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    z = pts[:, 2]
    if np.any(z <= 0.0):
        bad = int(np.argmax(z <= 0.0))
        raise ValueError(f"point {bad} has z={z[bad]:.6g} <= 0, cannot project")
    xy = pts[:, :2] / z[:, None]
    if camera.has_distortion():
        xy = distort_normalized(camera, xy)
    u = camera.fx * xy[:, 0] + camera.cx
    v = camera.fy * xy[:, 1] + camera.cy
    out = np.stack([u, v], axis=1)
    return out[0] if single else out


def undistort_points(camera: CameraIntrinsics, pixels: np.ndarray) -> np.ndarray:
    """Map observed pixels (N, 2) to ideal pinhole pixels of the same camera.

    Inverts the lens model by fixed-point iteration on normalized
    coordinates: up to 20 rounds, stopping early once the update step
    drops below 1e-9.
    """
    px = np.asarray(pixels, dtype=float).reshape(-1, 2)
    xd = (px[:, 0] - camera.cx) / camera.fx
    yd = (px[:, 1] - camera.cy) / camera.fy
    if not camera.has_distortion():
        out = px.copy()
        return out
    k1, k2, p1, p2, k3 = camera.dist
    x, y = xd.copy(), yd.copy()
    step = np.inf
    for _ in range(_UNDISTORT_MAX_ITER):
        r2 = x * x + y * y
        radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
        dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
        dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
        x_new = (xd - dx) / radial
        y_new = (yd - dy) / radial
        steps = np.hypot(x_new - x, y_new - y)
        step = float(np.max(steps))
        x, y = x_new, y_new
        if step < _UNDISTORT_STEP_TOL:
            break
    if step >= _UNDISTORT_STEP_TOL:
        stuck = np.flatnonzero(steps >= _UNDISTORT_STEP_TOL)
        warnings.warn(
            f"undistortion did not converge for {stuck.size} point(s): indices {stuck[:10].tolist()}"
        )
    u = camera.fx * x + camera.cx
    v = camera.fy * y + camera.cy
    return np.stack([u, v], axis=1)
