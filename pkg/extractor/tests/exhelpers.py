"""Synthetic inputs shared by the extractor tests."""

import numpy as np
import cv2


def smooth_texture(height, width, seed, low=30, high=225):
    """Blurred noise field: rich gradients everywhere, no repeating pattern."""
    rng = np.random.default_rng(seed)
    img = rng.uniform(0.0, 1.0, size=(height, width)).astype(np.float32)
    img = cv2.GaussianBlur(img, (0, 0), sigmaX=4.0)
    img = (img - img.min()) / (img.max() - img.min())
    return (low + img * (high - low)).astype(np.uint8)


def apply_homography(h, pts):
    pts = np.asarray(pts, dtype=float)
    ph = np.hstack([pts, np.ones((len(pts), 1))]) @ np.asarray(h, dtype=float).T
    return ph[:, :2] / ph[:, 2:3]


def grid_face_model(nx=13, ny=11):
    """Dome-shaped vertex grid in the face-model JSON form.

    Spans roughly a real face (120 x 150 mm), surface toward negative z,
    one eye vertex per side mirrored across x = 0.  Triangles are omitted;
    the consumer triangulates on its own.
    """
    us = np.linspace(-1.0, 1.0, nx)
    vs = np.linspace(-1.0, 1.0, ny)
    verts = []
    for v in vs:
        for u in us:
            r2 = u * u + v * v
            verts.append([60.0 * u, 75.0 * v, -25.0 - 28.0 * max(0.0, 1.0 - r2)])
    eye_row = 4  # v = -0.2 -> y = -15 mm
    left = eye_row * nx + 3   # u = -0.5 -> x = -30 mm
    right = eye_row * nx + 9  # u = +0.5 -> x = +30 mm
    return {
        "name": "test-grid-face",
        "units": "mm",
        "vertices": verts,
        "left_eye_indices": [left],
        "right_eye_indices": [right],
    }


def project_points(verts, yaw_deg, pitch_deg, t, fx, fy, cx, cy):
    """Pinhole projection of posed model points.

    Camera axes: x right, y down, z forward.  Pose rotates about +y by yaw
    first, then about +x by pitch, matching the downstream tools.
    """
    y = np.deg2rad(yaw_deg)
    p = np.deg2rad(pitch_deg)
    ry = np.array(
        [[np.cos(y), 0.0, np.sin(y)], [0.0, 1.0, 0.0], [-np.sin(y), 0.0, np.cos(y)]]
    )
    rp = np.array(
        [[1.0, 0.0, 0.0], [0.0, np.cos(p), -np.sin(p)], [0.0, np.sin(p), np.cos(p)]]
    )
    pc = np.asarray(verts, dtype=float) @ (rp @ ry).T + np.asarray(t, dtype=float)
    return np.stack(
        [fx * pc[:, 0] / pc[:, 2] + cx, fy * pc[:, 1] / pc[:, 2] + cy], axis=1
    )


def translation_h(tx, ty):
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])


def mild_h(angle_deg=2.5, scale=1.03, tx=4.0, ty=-3.0):
    a = np.deg2rad(angle_deg)
    return np.array(
        [
            [scale * np.cos(a), -np.sin(a), tx],
            [np.sin(a), scale * np.cos(a), ty],
            [1e-5, -1e-5, 1.0],
        ]
    )
