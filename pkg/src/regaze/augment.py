"""Augmentation core: gaze centering, head-pose sampling, mesh re-posing,
and per-eye virtual camera construction.

The augmentation works on the canonical (centered) face model: the
observed gaze is first expressed in the centered base pose, then a new
head pose is drawn and applied to both the mesh and the gaze. Eye
patches are rendered through a virtual camera sitting a fixed distance
behind the re-posed eye along -z, looking along +z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .camera import CameraIntrinsics, project
from .facemesh import TexturedMesh
from .geometry import AnglePair, RigidTransform, rotation_from_yaw_pitch

__all__ = [
    "AugmentationParams",
    "HeadPoseDistribution",
    "VirtualCamera",
    "apply_augmentation",
    "correct_gaze_to_base",
    "make_rng_stream",
    "make_virtual_camera",
    "sample_head_pose",
]

DEFAULT_DISTANCE_MM = 600.0
DEFAULT_FOCAL_PX = 650.0
DEFAULT_PATCH_HEIGHT = 64
DEFAULT_PATCH_WIDTH = 96


@dataclass(frozen=True)
class HeadPoseDistribution:
    """Bivariate normal over (yaw, pitch) in degrees, diagonal covariance.

    Variances are in squared degrees. The defaults target applications
    where subjects look below the camera, hence the 30 degree mean pitch.
    Roll is never sampled.
    """

    mean_yaw: float = 0.0
    mean_pitch: float = 30.0
    var_yaw: float = 10.0
    var_pitch: float = 10.0

    def __post_init__(self):
        if self.var_yaw < 0 or self.var_pitch < 0:
            raise ValueError("variances must be >= 0")
        vals = (self.mean_yaw, self.mean_pitch, self.var_yaw, self.var_pitch)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("distribution parameters must be finite")


@dataclass(frozen=True)
class AugmentationParams:
    """Run parameters: normalized camera geometry, patch size, seeding.

    Note the patch convention: patch_height x patch_width (the CLI's
    --patch HxW order). The default eye patch is 64 high by 96 wide.
    """

    d_n: float = DEFAULT_DISTANCE_MM
    f_n: float = DEFAULT_FOCAL_PX
    patch_width: int = DEFAULT_PATCH_WIDTH
    patch_height: int = DEFAULT_PATCH_HEIGHT
    seed: int = 42
    distribution: HeadPoseDistribution = field(default_factory=HeadPoseDistribution)

    def __post_init__(self):
        if self.d_n <= 0 or self.f_n <= 0:
            raise ValueError("d_n and f_n must be positive")
        if self.patch_width <= 0 or self.patch_height <= 0:
            raise ValueError("patch dimensions must be positive")
        if int(self.seed) < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class VirtualCamera:
    """Axis-aligned pinhole camera for eye-patch rendering.

    Orientation is always the identity (looking along +z); only the
    origin moves, so camera-frame coordinates are world minus origin.
    The principal point sits at the patch center.
    """

    origin: np.ndarray
    intrinsics: CameraIntrinsics
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))

    def camera_frame(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) - self.origin

    def project(self, points: np.ndarray) -> np.ndarray:
        return project(self.intrinsics, self.camera_frame(points))


def correct_gaze_to_base(pose: RigidTransform, gaze_actual: np.ndarray) -> np.ndarray:
    """Express an annotated gaze direction in the centered base pose.

    Directions rotate only, so this is the inverse rotation of the
    recovered head pose: g_b = R^T g_a. Norm is preserved.
    """
    g = np.asarray(gaze_actual, dtype=float).reshape(3)
    if np.linalg.norm(g) < 1e-12:
        raise ValueError("gaze must be nonzero")
    return pose.rotation.T @ g


def make_rng_stream(seed: int, sample_index: int) -> np.random.Generator:
    """Independent per-sample random stream.

    Streams are keyed by (master seed, sample index), so samples can be
    processed in any order, or in parallel, with identical draws.
    """
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(sample_index))))


def sample_head_pose(dist: HeadPoseDistribution, rng: np.random.Generator) -> AnglePair:
    """Draw one (yaw, pitch) pair; yaw first, then pitch, one normal each."""
    yaw = float(rng.normal(dist.mean_yaw, math.sqrt(dist.var_yaw)))
    pitch = float(rng.normal(dist.mean_pitch, math.sqrt(dist.var_pitch)))
    return AnglePair(yaw=yaw, pitch=pitch)


def apply_augmentation(
    mesh: TexturedMesh, gaze_base: np.ndarray, angles: AnglePair
) -> tuple[TexturedMesh, np.ndarray, np.ndarray]:
    """Re-pose the centered mesh and gaze to a sampled head pose.

    Returns (rotated mesh, rotated gaze, rotation matrix). The rotation
    is the new head-pose label; uv and texture are untouched because
    re-posing moves geometry, not appearance.
    """
    g = np.asarray(gaze_base, dtype=float).reshape(3)
    if np.linalg.norm(g) < 1e-12:
        raise ValueError("gaze must be nonzero")
    r = rotation_from_yaw_pitch(angles)
    rotated = replace(mesh, vertices=mesh.vertices @ r.T)
    return rotated, r @ g, r


def make_virtual_camera(eye_pos: np.ndarray, params: AugmentationParams) -> VirtualCamera:
    """Virtual camera for one eye: at the eye's (x, y), backed off d_n in z.

    By construction the eye projects exactly onto the patch center.
    """
    e = np.asarray(eye_pos, dtype=float).reshape(3)
    if not np.all(np.isfinite(e)):
        raise ValueError("eye position must be finite")
    origin = np.array([e[0], e[1], e[2] - params.d_n])
    intr = CameraIntrinsics(
        fx=params.f_n,
        fy=params.f_n,
        cx=params.patch_width / 2.0,
        cy=params.patch_height / 2.0,
    )
    return VirtualCamera(origin=origin, intrinsics=intr, width=params.patch_width, height=params.patch_height)
