"""Generate the bundled canonical face model JSON.

Builds a 468-vertex face-shaped height-field mesh in millimeters:
a smooth dome (facing -z, camera-frame y down) with a nose bump,
hand-placed eye/nose/mouth/chin feature points, and a golden-angle
spiral fill for the remaining vertices. Triangles come from a 2D
Delaunay triangulation of the xy coordinates.

Run from the repository root:
    python tools/gen_face_model.py
"""

from __future__ import annotations

import json
import math
import pathlib

import numpy as np
from scipy.spatial import Delaunay

OUT_PATH = pathlib.Path(__file__).resolve().parents[1] / "src" / "regaze" / "data" / "face468.json"

VERTEX_COUNT = 468
ELLIPSE_A = 72.0   # face half-width, mm
ELLIPSE_B = 92.0   # face half-height, mm
DOME_DEPTH = 45.0  # max shell depth, mm
NOSE_HEIGHT = 12.0
MIN_FILL_DIST = 4.0

# y is down: eyes above center (negative y), mouth and chin below (positive y)
LEFT_EYE_XY = [
    (-48.0, -20.0), (-18.0, -20.0),                    # outer, inner corner
    (-41.0, -25.0), (-33.0, -27.0), (-25.0, -25.0),    # upper lid
    (-41.0, -15.0), (-33.0, -13.0), (-25.0, -15.0),    # lower lid
]
RIGHT_EYE_XY = [(-x, y) for x, y in LEFT_EYE_XY]

OTHER_FEATURES_XY = [
    (0.0, -8.0),                  # nose bridge
    (0.0, 8.0),                   # nose tip
    (-8.0, 14.0), (8.0, 14.0),    # nostrils
    (-22.0, 35.0), (22.0, 35.0),  # mouth corners
    (0.0, 31.0), (0.0, 39.0),     # upper / lower lip
    (0.0, 60.0),                  # chin
    (-33.0, -38.0), (33.0, -38.0),  # brows
    (-55.0, 10.0), (55.0, 10.0),  # cheeks
    (0.0, -55.0),                 # forehead
]


def surface_z(x: float, y: float) -> float:
    """Height field of the face: dome plus nose bump, extruded toward -z."""
    e = 1.0 - (x / ELLIPSE_A) ** 2 - (y / ELLIPSE_B) ** 2
    shell = DOME_DEPTH * math.sqrt(max(0.0, e))
    nose = NOSE_HEIGHT * math.exp(-(x * x / (2.0 * 9.0 ** 2) + (y - 8.0) ** 2 / (2.0 * 11.0 ** 2)))
    return -(shell + nose)


def spiral_fill(existing_xy: np.ndarray, count: int) -> list[tuple[float, float]]:
    """Deterministic golden-angle spiral inside the face ellipse.

    Candidates closer than MIN_FILL_DIST to an already-placed vertex are
    skipped so the later triangulation has no sliver triangles.
    """
    golden = math.pi * (3.0 - math.sqrt(5.0))
    placed = list(existing_xy)
    out = []
    i = 0
    while len(out) < count:
        i += 1
        frac = math.sqrt(i / (count * 1.35))
        if frac > 0.995:
            raise RuntimeError("spiral exhausted before reaching the vertex budget")
        theta = i * golden
        x = ELLIPSE_A * frac * math.cos(theta)
        y = ELLIPSE_B * frac * math.sin(theta)
        nearest = min(math.hypot(x - px, y - py) for px, py in placed)
        if nearest < MIN_FILL_DIST:
            continue
        placed.append((x, y))
        out.append((x, y))
    return out


def main():
    feature_xy = LEFT_EYE_XY + RIGHT_EYE_XY + OTHER_FEATURES_XY
    left_idx = list(range(len(LEFT_EYE_XY)))
    right_idx = list(range(len(LEFT_EYE_XY), len(LEFT_EYE_XY) + len(RIGHT_EYE_XY)))

    fill_xy = spiral_fill(np.array(feature_xy), VERTEX_COUNT - len(feature_xy))
    xy = np.array(feature_xy + fill_xy)
    assert xy.shape == (VERTEX_COUNT, 2)

    verts = np.array([[x, y, surface_z(x, y)] for x, y in xy])
    verts = np.round(verts, 2)

    tri = Delaunay(xy)
    triangles = np.sort(tri.simplices, axis=1)
    triangles = triangles[np.lexsort(triangles.T[::-1])]

    model = {
        "name": "synth-face-468-v1",
        "units": "mm",
        "vertices": [[float(c) for c in v] for v in verts],
        "triangles": [[int(i) for i in t] for t in triangles],
        "left_eye_indices": left_idx,
        "right_eye_indices": right_idx,
    }
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text(json.dumps(model, indent=1) + "\n")
    print(f"wrote {OUT_PATH}: {VERTEX_COUNT} vertices, {len(triangles)} triangles")


if __name__ == "__main__":
    main()
