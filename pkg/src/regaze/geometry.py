"""Core 3D math: rotations, rigid transforms, directions, angular error.

Conventions used throughout the package:
  - camera frame is x-right, y-down, z-forward (standard CV pinhole frame)
  - points carry millimeter units, directions are unitless
  - angles are degrees at every public interface, radians internally
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AnglePair",
    "RigidTransform",
    "angular_error",
    "apply_to_direction",
    "apply_to_points",
    "compose",
    "identity_transform",
    "inverse",
    "is_rotation_matrix",
    "rotation_from_axis_angle",
    "rotation_from_yaw_pitch",
    "rotation_geodesic_deg",
    "rotation_pitch",
    "rotation_yaw",
    "unit",
    "yaw_pitch_from_rotation",
]

_ZERO_NORM_TOL = 1e-12


@dataclass(frozen=True)
class AnglePair:
    """A (yaw, pitch) head-pose angle pair in degrees. Roll is never represented."""

    yaw: float
    pitch: float


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) pose: p' = rotation @ p + translation, translation in mm."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))
        if self.rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {self.rotation.shape}")


def identity_transform() -> RigidTransform:
    return RigidTransform(np.eye(3), np.zeros(3))


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize a vector; rejects (near-)zero input."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < _ZERO_NORM_TOL:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def rotation_pitch(pitch_deg: float) -> np.ndarray:
    """Rotation about the lateral (x) axis."""
    p = math.radians(pitch_deg)
    c, s = math.cos(p), math.sin(p)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_yaw(yaw_deg: float) -> np.ndarray:
    """Rotation about the vertical (y) axis."""
    y = math.radians(yaw_deg)
    c, s = math.cos(y), math.sin(y)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_from_yaw_pitch(angles: AnglePair) -> np.ndarray:
    """Head-pose rotation R = R_pitch(p) @ R_yaw(y), in that order."""
    if not (math.isfinite(angles.yaw) and math.isfinite(angles.pitch)):
        raise ValueError(f"angles must be finite, got {angles}")
    return rotation_pitch(angles.pitch) @ rotation_yaw(angles.yaw)


def rotation_from_axis_angle(axis: np.ndarray, angle_deg: float) -> np.ndarray:
    """Rodrigues rotation about an arbitrary axis."""
    a = unit(axis)
    t = math.radians(angle_deg)
    k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + math.sin(t) * k + (1.0 - math.cos(t)) * (k @ k)


def is_rotation_matrix(r: np.ndarray, tol: float = 1e-9) -> bool:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        return False
    if not np.allclose(r.T @ r, np.eye(3), atol=tol):
        return False
    return abs(np.linalg.det(r) - 1.0) <= tol


def apply_to_points(transform: RigidTransform, points: np.ndarray) -> np.ndarray:
    """Apply R @ p + t to each row of an (N, 3) point array."""
    pts = np.asarray(points, dtype=float)
    return pts @ transform.rotation.T + transform.translation


def apply_to_direction(rotation: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Rotate a direction vector. Directions ignore translation (weight-0 homogeneous)."""
    d = np.asarray(direction, dtype=float)
    if np.linalg.norm(d) < _ZERO_NORM_TOL:
        raise ValueError("direction must be nonzero")
    return np.asarray(rotation, dtype=float) @ d


def inverse(transform: RigidTransform) -> RigidTransform:
    """Inverse pose (R^T, -R^T t)."""
    rt = transform.rotation.T
    return RigidTransform(rt, -rt @ transform.translation)


def compose(outer: RigidTransform, inner: RigidTransform) -> RigidTransform:
    """compose(A, B) applies B first, then A."""
    return RigidTransform(
        outer.rotation @ inner.rotation,
        outer.rotation @ inner.translation + outer.translation,
    )


def angular_error(g: np.ndarray, g_e: np.ndarray) -> float:
    """Angle in degrees between two gaze directions, folded to [0, 90].

    The absolute value on the dot product folds obtuse angles, so
    antiparallel vectors score 0. Computed as atan2(|g x g_e|, |g.g_e|),
    which equals acos of the folded cosine but stays accurate for
    near-identical directions where acos loses half the float digits.
    """
    g = np.asarray(g, dtype=float)
    g_e = np.asarray(g_e, dtype=float)
    ng, ne = np.linalg.norm(g), np.linalg.norm(g_e)
    if ng < _ZERO_NORM_TOL or ne < _ZERO_NORM_TOL:
        raise ValueError("gaze vectors must be nonzero")
    s = float(np.linalg.norm(np.cross(g, g_e)))
    c = abs(float(np.dot(g, g_e)))
    return math.degrees(math.atan2(s, c))


def rotation_geodesic_deg(r_a: np.ndarray, r_b: np.ndarray) -> float:
    """Geodesic distance between two rotations, in degrees."""
    c = (np.trace(np.asarray(r_a).T @ np.asarray(r_b)) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, float(c)))))


def yaw_pitch_from_rotation(r: np.ndarray) -> AnglePair:
    """Recover (yaw, pitch) from a roll-free R_pitch @ R_yaw product.

    For rotations with a roll component this is the nearest roll-free
    decomposition reading, used only for histogram reporting.
    """
    r = np.asarray(r, dtype=float)
    yaw = math.degrees(math.atan2(r[0, 2], r[0, 0]))
    pitch = math.degrees(math.atan2(r[2, 1], r[1, 1]))
    return AnglePair(yaw=yaw, pitch=pitch)
