"""Evaluation-time normalization: rotate and scale a real camera frame
into the fixed training space, and map predicted gaze back out.

The normalizing rotation points the camera's z-axis at the eye center
with head roll removed; the scale places the eye at the training
distance d_n. The pixel-level effect is a single 3x3 homography.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .augment import AugmentationParams
from .camera import CameraIntrinsics
from .geometry import unit

__all__ = [
    "NormalizationResult",
    "compute_normalization",
    "denormalize_gaze",
    "normalize_gaze",
    "normalize_image",
]


@dataclass(frozen=True)
class NormalizationResult:
    """Normalization geometry for one frame.

    rotation: camera-to-normalized-camera rotation (rows x_n, y_n, z_n).
    scale: d_n / actual eye distance.
    warp: pixel-to-pixel homography from the real frame to the patch.
    patch: filled by normalize_image; None until then.
    """

    rotation: np.ndarray
    scale: float
    warp: np.ndarray
    patch_width: int
    patch_height: int
    patch: np.ndarray = None


def compute_normalization(
    head_rotation: np.ndarray,
    eye_center_cam: np.ndarray,
    intrinsics: CameraIntrinsics,
    params: AugmentationParams,
) -> NormalizationResult:
    """Build the normalizing rotation, scale, and image warp for one eye.

    z_n is the unit vector toward the eye; x_n is the head's lateral
    axis (first rotation column) made orthogonal to z_n; y_n completes
    the right-handed frame. scale = d_n / distance, and the warp is
    C_n . diag(1, 1, scale) . R_norm . C_r^-1.
    """
    e = np.asarray(eye_center_cam, dtype=float).reshape(3)
    if e[2] <= 0:
        raise ValueError("eye center must be in front of the camera (z > 0)")
    r_head = np.asarray(head_rotation, dtype=float)

    z_n = unit(e)
    lateral = r_head[:, 0]
    x_raw = lateral - (lateral @ z_n) * z_n
    if np.linalg.norm(x_raw) < 1e-12:
        raise ValueError("head lateral axis is parallel to the view ray; roll is undefined")
    x_n = unit(x_raw)
    y_n = np.cross(z_n, x_n)
    r_norm = np.vstack([x_n, y_n, z_n])

    dist = float(np.linalg.norm(e))
    scale = params.d_n / dist
    c_n = np.array(
        [
            [params.f_n, 0.0, params.patch_width / 2.0],
            [0.0, params.f_n, params.patch_height / 2.0],
            [0.0, 0.0, 1.0],
        ]
    )
    s = np.diag([1.0, 1.0, scale])
    warp = c_n @ s @ r_norm @ np.linalg.inv(intrinsics.matrix)
    return NormalizationResult(
        rotation=r_norm,
        scale=scale,
        warp=warp,
        patch_width=params.patch_width,
        patch_height=params.patch_height,
    )


def normalize_image(frame: np.ndarray, result: NormalizationResult) -> np.ndarray:
    """Warp a camera frame into the normalized eye patch.

    Inverse mapping: each output pixel center is pulled back through
    warp^-1 and the source is sampled bilinearly; pixels mapping outside
    the frame become 0. Returns uint8 with the frame's channel count.
    """
    img = np.asarray(frame)
    if img.ndim not in (2, 3):
        raise ValueError(f"frame must be (H, W) or (H, W, C), got {img.shape}")
    h_out, w_out = result.patch_height, result.patch_width
    inv = np.linalg.inv(result.warp)

    cols, rows = np.meshgrid(np.arange(w_out) + 0.5, np.arange(h_out) + 0.5)
    ones = np.ones_like(cols)
    src = inv @ np.stack([cols.ravel(), rows.ravel(), ones.ravel()])
    u = src[0] / src[2]
    v = src[1] / src[2]

    # continuous (u, v) to array coords; pixel centers at half-integers
    x = u - 0.5
    y = v - 0.5
    h_in, w_in = img.shape[0], img.shape[1]
    # the warp matrix product carries ~1e-13 rounding; a sample that far
    # past the border still reads the edge pixel instead of background
    tol = 1e-6
    valid = (
        (x >= -tol) & (x <= w_in - 1 + tol) & (y >= -tol) & (y <= h_in - 1 + tol)
        & (src[2] != 0)
    )

    xc = np.clip(x, 0, w_in - 1)
    yc = np.clip(y, 0, h_in - 1)
    x0 = np.floor(xc).astype(int)
    y0 = np.floor(yc).astype(int)
    x1 = np.minimum(x0 + 1, w_in - 1)
    y1 = np.minimum(y0 + 1, h_in - 1)
    fx = xc - x0
    fy = yc - y0

    tex = img.astype(float)
    if tex.ndim == 3:
        fx = fx[:, None]
        fy = fy[:, None]
        valid_w = valid[:, None]
    else:
        valid_w = valid
    top = tex[y0, x0] * (1.0 - fx) + tex[y0, x1] * fx
    bot = tex[y1, x0] * (1.0 - fx) + tex[y1, x1] * fx
    vals = np.where(valid_w, top * (1.0 - fy) + bot * fy, 0.0)

    out_shape = (h_out, w_out) if tex.ndim == 2 else (h_out, w_out, tex.shape[2])
    return np.clip(np.rint(vals.reshape(out_shape)), 0, 255).astype(np.uint8)


def normalize_gaze(g: np.ndarray, result: NormalizationResult) -> np.ndarray:
    """Express a camera-frame gaze direction in the normalized frame."""
    g = np.asarray(g, dtype=float).reshape(3)
    if np.linalg.norm(g) < 1e-12:
        raise ValueError("gaze must be nonzero")
    return result.rotation @ g


def denormalize_gaze(g_n: np.ndarray, result: NormalizationResult) -> np.ndarray:
    """Map a normalized-space gaze direction back to the camera frame.

    Directions are scale-free, so only the rotation inverts: g = R^T g_n.
    """
    g_n = np.asarray(g_n, dtype=float).reshape(3)
    if np.linalg.norm(g_n) < 1e-12:
        raise ValueError("gaze must be nonzero")
    return result.rotation.T @ g_n
