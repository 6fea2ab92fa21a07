"""regaze: semi-synthetic gaze dataset augmentation.

Recovers head pose from 2D landmarks, builds a textured face mesh,
re-poses it under a configurable head-pose distribution, and renders
normalized eye patches through a virtual camera. Includes the
evaluation-time normalization and angular-error tooling needed to use
the augmented data.
"""

__version__ = "0.1.0"

from .augment import (
    AugmentationParams,
    HeadPoseDistribution,
    VirtualCamera,
    apply_augmentation,
    correct_gaze_to_base,
    make_rng_stream,
    make_virtual_camera,
    sample_head_pose,
)
from .camera import CameraIntrinsics, project, undistort_points
from .facemesh import (
    FaceModel,
    TexturedMesh,
    build_textured_mesh,
    eye_center,
    load_bundled_face_model,
    load_face_model,
    triangulate_fallback,
)
from .geometry import (
    AnglePair,
    RigidTransform,
    angular_error,
    apply_to_direction,
    apply_to_points,
    compose,
    inverse,
    rotation_from_yaw_pitch,
)
from .normalize import (
    NormalizationResult,
    compute_normalization,
    denormalize_gaze,
    normalize_gaze,
    normalize_image,
)
from .pnp import PnPProblem, PnPSolution, reprojection_residuals, solve_pnp
from .render import rasterize_triangle, render, write_png

__all__ = [
    "AnglePair",
    "AugmentationParams",
    "CameraIntrinsics",
    "FaceModel",
    "HeadPoseDistribution",
    "NormalizationResult",
    "PnPProblem",
    "PnPSolution",
    "RigidTransform",
    "TexturedMesh",
    "VirtualCamera",
    "__version__",
    "angular_error",
    "apply_augmentation",
    "apply_to_direction",
    "apply_to_points",
    "build_textured_mesh",
    "compose",
    "compute_normalization",
    "correct_gaze_to_base",
    "denormalize_gaze",
    "eye_center",
    "inverse",
    "load_bundled_face_model",
    "load_face_model",
    "make_rng_stream",
    "make_virtual_camera",
    "normalize_gaze",
    "normalize_image",
    "project",
    "rasterize_triangle",
    "render",
    "reprojection_residuals",
    "rotation_from_yaw_pitch",
    "sample_head_pose",
    "solve_pnp",
    "triangulate_fallback",
    "undistort_points",
    "write_png",
]
