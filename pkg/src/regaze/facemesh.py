"""Face model loading and textured-mesh assembly.

A face model is a JSON file holding a named vertex set in millimeters,
an optional triangle list, and per-eye vertex index lists. Landmark
arrays are always ordered like the model's vertices: landmark i is the
image observation of vertex i.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, QhullError

__all__ = [
    "FaceModel",
    "TexturedMesh",
    "build_textured_mesh",
    "eye_center",
    "load_bundled_face_model",
    "load_face_model",
    "triangulate_fallback",
]

_BUNDLED_NAME = "face468.json"


@dataclass(frozen=True)
class FaceModel:
    """Canonical face geometry in millimeters.

    triangles is None when the source file omits them; callers needing
    connectivity go through triangulate_fallback.
    """

    name: str
    vertices: np.ndarray
    triangles: np.ndarray
    left_eye_indices: np.ndarray
    right_eye_indices: np.ndarray


@dataclass(frozen=True)
class TexturedMesh:
    """A face model bound to one image: per-vertex uv plus the texture.

    uv coordinates are fractions of image width/height in [0, 1].
    uv_clamped counts landmarks that fell outside the image and were
    clamped to its border.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    uv: np.ndarray
    texture: np.ndarray
    uv_clamped: int


def _as_index_array(raw, n_vertices: int, field: str) -> np.ndarray:
    idx = np.asarray(raw, dtype=int).reshape(-1)
    if idx.size == 0:
        raise ValueError(f"{field} must not be empty")
    if np.any(idx < 0) or np.any(idx >= n_vertices):
        raise ValueError(f"{field} contains out-of-range vertex indices")
    return idx


def load_face_model(path) -> FaceModel:
    """Load and validate a face model JSON file.

    The file must declare units of "mm"; anything else is rejected so
    scale bugs fail loudly instead of producing wrong depths.
    """
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"face model {path}: not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ValueError(f"face model {path}: top level must be an object")

    for field in ("name", "units", "vertices", "left_eye_indices", "right_eye_indices"):
        if field not in doc:
            raise ValueError(f"face model {path}: missing required field '{field}'")
    if doc["units"] != "mm":
        raise ValueError(f"face model {path}: units must be 'mm', got {doc['units']!r}")

    verts = np.asarray(doc["vertices"], dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 3 or verts.shape[0] < 3:
        raise ValueError(f"face model {path}: vertices must be (N>=3, 3)")
    if not np.all(np.isfinite(verts)):
        raise ValueError(f"face model {path}: vertices must be finite")

    tris = None
    if doc.get("triangles") is not None:
        tris = np.asarray(doc["triangles"], dtype=int)
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError(f"face model {path}: triangles must be (M, 3)")
        if np.any(tris < 0) or np.any(tris >= verts.shape[0]):
            raise ValueError(f"face model {path}: triangle indices out of range")

    left = _as_index_array(doc["left_eye_indices"], verts.shape[0], "left_eye_indices")
    right = _as_index_array(doc["right_eye_indices"], verts.shape[0], "right_eye_indices")
    if set(left.tolist()) & set(right.tolist()):
        raise ValueError(f"face model {path}: eye index lists must be disjoint")

    return FaceModel(
        name=str(doc["name"]),
        vertices=verts,
        triangles=tris,
        left_eye_indices=left,
        right_eye_indices=right,
    )


def load_bundled_face_model() -> FaceModel:
    """Load the face model shipped inside the package."""
    ref = resources.files("regaze").joinpath("data", _BUNDLED_NAME)
    with resources.as_file(ref) as p:
        return load_face_model(p)


def triangulate_fallback(points: np.ndarray) -> np.ndarray:
    """Triangle connectivity from a 2D Delaunay triangulation.

    Input is (N, 2) or (N, 3); only the first two coordinates are used.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise ValueError(f"points must be (N, 2) or (N, 3), got {pts.shape}")
    if pts.shape[0] < 3:
        raise ValueError("need at least 3 points to triangulate")
    try:
        tri = Delaunay(pts[:, :2])
    except QhullError as e:
        raise ValueError(f"triangulation failed (degenerate points?): {e}") from e
    return np.asarray(tri.simplices, dtype=int)


def eye_center(vertices: np.ndarray, model: FaceModel, side: str) -> np.ndarray:
    """Eye center of a (possibly transformed) vertex set: the mean of the
    vertices the model's index list names for that eye.
    """
    if side == "left":
        idx = model.left_eye_indices
    elif side == "right":
        idx = model.right_eye_indices
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    verts = np.asarray(vertices, dtype=float)
    if np.any(idx >= verts.shape[0]):
        raise ValueError("eye indices out of range for this vertex list")
    return verts[idx].mean(axis=0)


def build_textured_mesh(model: FaceModel, landmarks: np.ndarray, image: np.ndarray) -> TexturedMesh:
    """Bind an image to the face model through its detected landmarks.

    Each vertex's uv is its landmark position divided by image width and
    height. Landmarks outside the image are clamped to [0, 1] and
    counted; a warning reports how many were clamped. Models without
    triangles get a screen-space triangulation of the landmarks.
    """
    img = np.asarray(image)
    if img.ndim not in (2, 3) or img.shape[0] < 2 or img.shape[1] < 2:
        raise ValueError(f"image must be (H, W) or (H, W, C) with H, W >= 2, got {img.shape}")
    lm = np.asarray(landmarks, dtype=float)
    n = model.vertices.shape[0]
    if lm.shape != (n, 2):
        raise ValueError(f"landmarks must be ({n}, 2) to match the model, got {lm.shape}")
    if not np.all(np.isfinite(lm)):
        raise ValueError("landmarks must be finite")

    h, w = img.shape[0], img.shape[1]
    uv = lm / np.array([w, h], dtype=float)
    clamped = int(np.sum(np.any((uv < 0.0) | (uv > 1.0), axis=1)))
    if clamped:
        warnings.warn(f"{clamped} landmark(s) outside the image; uv clamped to the border")
        uv = np.clip(uv, 0.0, 1.0)

    tris = model.triangles if model.triangles is not None else triangulate_fallback(lm)
    tris = np.asarray(tris, dtype=int)
    degenerate = (tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])
    if np.any(degenerate):
        raise ValueError(f"{int(degenerate.sum())} degenerate triangle(s) with repeated indices")

    return TexturedMesh(
        vertices=model.vertices,
        triangles=tris,
        uv=uv,
        texture=img,
        uv_clamped=clamped,
    )
