"""Deterministic software rasterizer for eye-patch rendering.

Renders a textured mesh through an axis-aligned virtual camera with a
z-buffer, near-plane polygon clipping, perspective-correct texture
interpolation, and bilinear clamp-to-edge sampling. Pixel (row, col)
is sampled at continuous coordinates (col + 0.5, row + 0.5). Output is
always bit-identical for identical inputs: triangles are processed
serially and the float color buffer is rounded once at the end.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .augment import VirtualCamera
from .camera import CameraIntrinsics
from .facemesh import TexturedMesh

__all__ = ["NEAR_PLANE_MM", "rasterize_triangle", "render", "write_png"]

NEAR_PLANE_MM = 1.0


def _sample_bilinear(tex: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear texture fetch at uv in [0,1]^2; clamp-to-edge addressing.

    uv (0,0) maps to the first texel center, (1,1) to the last.
    """
    h, w = tex.shape[0], tex.shape[1]
    x = np.clip(u * (w - 1), 0.0, w - 1.0)
    y = np.clip(v * (h - 1), 0.0, h - 1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    if tex.ndim == 3:
        fx = fx[:, None]
        fy = fy[:, None]
    top = tex[y0, x0] * (1.0 - fx) + tex[y0, x1] * fx
    bot = tex[y1, x0] * (1.0 - fx) + tex[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def _clip_near(verts: np.ndarray, uvs: np.ndarray, near: float) -> tuple[np.ndarray, np.ndarray]:
    """Clip a triangle against the z >= near plane (Sutherland-Hodgman).

    Attributes interpolate linearly along edges, which is exact for uv
    over the 3D triangle plane. Result has 0, 3, or 4 vertices.
    """
    out_v, out_uv = [], []
    for i in range(3):
        a, ua = verts[i], uvs[i]
        b, ub = verts[(i + 1) % 3], uvs[(i + 1) % 3]
        a_in = a[2] >= near
        b_in = b[2] >= near
        if a_in:
            out_v.append(a)
            out_uv.append(ua)
        if a_in != b_in:
            t = (near - a[2]) / (b[2] - a[2])
            out_v.append(a + t * (b - a))
            out_uv.append(ua + t * (ub - ua))
    if len(out_v) < 3:
        return np.empty((0, 3)), np.empty((0, 2))
    return np.array(out_v), np.array(out_uv)


def _raster_one(
    verts: np.ndarray,
    uvs: np.ndarray,
    texture: np.ndarray,
    color: np.ndarray,
    depth: np.ndarray,
    intrinsics: CameraIntrinsics,
) -> None:
    """Rasterize one clipped camera-frame triangle (all z >= near)."""
    h, w = depth.shape
    z = verts[:, 2]
    px = intrinsics.fx * verts[:, 0] / z + intrinsics.cx
    py = intrinsics.fy * verts[:, 1] / z + intrinsics.cy

    # signed doubled area; degenerate (edge-on) triangles paint nothing
    area2 = (px[1] - px[0]) * (py[2] - py[0]) - (py[1] - py[0]) * (px[2] - px[0])
    if area2 == 0.0:
        return

    c0 = max(0, int(np.floor(px.min() - 0.5)))
    c1 = min(w - 1, int(np.ceil(px.max() - 0.5)))
    r0 = max(0, int(np.floor(py.min() - 0.5)))
    r1 = min(h - 1, int(np.ceil(py.max() - 0.5)))
    if c0 > c1 or r0 > r1:
        return

    cols = np.arange(c0, c1 + 1)
    rows = np.arange(r0, r1 + 1)
    cx = cols + 0.5
    cy = rows + 0.5
    gx, gy = np.meshgrid(cx, cy)

    def edge(i, j):
        return (px[j] - px[i]) * (gy - py[i]) - (py[j] - py[i]) * (gx - px[i])

    # normalized signed barycentrics; >= 0 for either winding (double-sided)
    wa = edge(1, 2) / area2
    wb = edge(2, 0) / area2
    wc = edge(0, 1) / area2
    inside = (wa >= 0.0) & (wb >= 0.0) & (wc >= 0.0)
    if not inside.any():
        return

    inv_z = wa * (1.0 / z[0]) + wb * (1.0 / z[1]) + wc * (1.0 / z[2])
    frag_z = 1.0 / inv_z
    sub_depth = depth[r0 : r1 + 1, c0 : c1 + 1]
    win = inside & (frag_z < sub_depth)
    if not win.any():
        return

    uoz = wa * (uvs[0, 0] / z[0]) + wb * (uvs[1, 0] / z[1]) + wc * (uvs[2, 0] / z[2])
    voz = wa * (uvs[0, 1] / z[0]) + wb * (uvs[1, 1] / z[1]) + wc * (uvs[2, 1] / z[2])
    u = uoz[win] / inv_z[win]
    v = voz[win] / inv_z[win]

    sub_depth[win] = frag_z[win]
    sub_color = color[r0 : r1 + 1, c0 : c1 + 1]
    sub_color[win] = _sample_bilinear(texture, u, v)


def rasterize_triangle(
    vertices: np.ndarray,
    uvs: np.ndarray,
    texture: np.ndarray,
    color: np.ndarray,
    depth: np.ndarray,
    intrinsics: CameraIntrinsics,
) -> None:
    """Rasterize one camera-frame triangle into color and depth buffers.

    vertices: (3, 3) camera-frame positions; uvs: (3, 2) in [0,1]^2;
    texture: float (H, W) or (H, W, 3); color: float buffer matching the
    texture's channel count; depth: (H, W) initialized to +inf.

    Writes only pixels whose center lies inside the projected triangle
    and whose perspective-correct depth beats the buffer (strict <).
    Geometry in front of the z = 1 mm plane is clipped away first; both
    windings are rasterized (no culling).
    """
    if color.shape[:2] != depth.shape:
        raise ValueError("color and depth buffer sizes disagree")
    verts = np.asarray(vertices, dtype=float).reshape(3, 3)
    uv = np.asarray(uvs, dtype=float).reshape(3, 2)

    if np.all(verts[:, 2] >= NEAR_PLANE_MM):
        _raster_one(verts, uv, texture, color, depth, intrinsics)
        return
    cv, cuv = _clip_near(verts, uv, NEAR_PLANE_MM)
    for k in range(1, cv.shape[0] - 1):
        idx = [0, k, k + 1]
        _raster_one(cv[idx], cuv[idx], texture, color, depth, intrinsics)


def _prepare_texture(texture: np.ndarray, channels: str) -> np.ndarray:
    """Texture as float64 with the requested channel count.

    RGB to gray uses the 0.299/0.587/0.114 luma weights; gray to RGB
    replicates. An alpha channel, if present, is dropped.
    """
    tex = np.asarray(texture, dtype=float)
    if tex.ndim == 3 and tex.shape[2] >= 3:
        tex = tex[:, :, :3]
    elif tex.ndim == 3 and tex.shape[2] == 1:
        tex = tex[:, :, 0]
    elif tex.ndim != 2:
        raise ValueError(f"unsupported texture shape {texture.shape}")

    if channels == "gray":
        if tex.ndim == 3:
            tex = 0.299 * tex[:, :, 0] + 0.587 * tex[:, :, 1] + 0.114 * tex[:, :, 2]
        return tex
    if channels == "rgb":
        if tex.ndim == 2:
            tex = np.stack([tex, tex, tex], axis=2)
        return tex
    raise ValueError(f"channels must be 'gray' or 'rgb', got {channels!r}")


def render(
    mesh: TexturedMesh,
    cam: VirtualCamera,
    background: int = 0,
    channels: str = "gray",
) -> np.ndarray:
    """Render the mesh through the virtual camera into a uint8 patch.

    Returns (height, width) for gray or (height, width, 3) for rgb.
    Pixels no triangle covers keep the background value; a mesh fully
    behind the camera therefore yields a background-only image.
    """
    if not 0 <= int(background) <= 255:
        raise ValueError("background must be in [0, 255]")
    tex = _prepare_texture(mesh.texture, channels)
    shape = (cam.height, cam.width) if tex.ndim == 2 else (cam.height, cam.width, 3)
    color = np.full(shape, float(background))
    depth = np.full((cam.height, cam.width), np.inf)

    verts_cam = mesh.vertices - cam.origin
    for tri in mesh.triangles:
        rasterize_triangle(verts_cam[tri], mesh.uv[tri], tex, color, depth, cam.intrinsics)

    return np.clip(np.rint(color), 0, 255).astype(np.uint8)


def write_png(image: np.ndarray, path) -> None:
    """Write a uint8 grayscale or RGB image as PNG."""
    img = np.asarray(image)
    if img.dtype != np.uint8 or img.ndim not in (2, 3):
        raise ValueError("expected a uint8 (H, W) or (H, W, 3) image")
    Image.fromarray(img).save(path, format="PNG")
