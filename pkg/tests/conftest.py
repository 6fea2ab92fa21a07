import json

import numpy as np
import pytest
from PIL import Image

from regaze.facemesh import load_bundled_face_model

import oracles


@pytest.fixture(scope="session")
def bundled_model():
    return load_bundled_face_model()


def make_face_texture(width=160, height=120, rgb=False, seed=0):
    """Deterministic smooth synthetic texture (gradient plus sinusoids)."""
    y, x = np.mgrid[0:height, 0:width].astype(float)
    base = (
        96.0
        + 60.0 * np.sin(2.0 * np.pi * x / width + seed)
        + 40.0 * np.cos(2.0 * np.pi * y / height)
        + 30.0 * (x / width)
    )
    gray = np.clip(base, 0, 255).astype(np.uint8)
    if not rgb:
        return gray
    r = gray
    g = np.clip(base * 0.8 + 20, 0, 255).astype(np.uint8)
    b = np.clip(255 - base, 0, 255).astype(np.uint8)
    return np.stack([r, g, b], axis=2)


# intrinsics that keep the whole projected face inside a 160x120 image
# for poses up to ~20 deg and depths near 600 mm
SYN_INTRINSICS = {"fx": 240.0, "fy": 240.0, "cx": 80.0, "cy": 60.0}
SYN_IMAGE_SIZE = (120, 160)


def make_sample_line(
    sample_id,
    image_path,
    landmarks,
    gaze_direction=None,
    gaze_target=None,
    gaze_origin=None,
    user_id=None,
    intrinsics=None,
):
    doc = {
        "sample_id": sample_id,
        "image_path": str(image_path),
        "landmarks": np.asarray(landmarks).tolist(),
        "intrinsics": dict(intrinsics or SYN_INTRINSICS),
    }
    if gaze_direction is not None:
        doc["gaze_direction"] = list(gaze_direction)
    if gaze_target is not None:
        doc["gaze_target"] = list(gaze_target)
    if gaze_origin is not None:
        doc["gaze_origin"] = list(gaze_origin)
    if user_id is not None:
        doc["user_id"] = user_id
    return json.dumps(doc)


@pytest.fixture
def manifest_factory(tmp_path, bundled_model):
    """Build a synthetic manifest whose landmarks come from known poses.

    Returns (manifest_path, truths) where truths[i] holds the generating
    rotation, translation, and gaze of sample i.
    """

    def build(n_samples=3, seed=0, gaze_form="direction", dirname="data"):
        rng = np.random.default_rng(seed)
        root = tmp_path / dirname
        root.mkdir()
        verts = bundled_model.vertices
        h, w = SYN_IMAGE_SIZE
        lines = []
        truths = []
        for i in range(n_samples):
            yaw = float(rng.uniform(-15, 15))
            pitch = float(rng.uniform(-15, 15))
            rot = oracles.rot_yaw_pitch(yaw, pitch)
            t = np.array(
                [rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(560, 640)]
            )
            cam_pts = verts @ rot.T + t
            lm = oracles.project_pinhole(
                SYN_INTRINSICS["fx"],
                SYN_INTRINSICS["fy"],
                SYN_INTRINSICS["cx"],
                SYN_INTRINSICS["cy"],
                cam_pts,
            )
            img_name = f"img_{i}.png"
            tex = make_face_texture(w, h, seed=i)
            Image.fromarray(tex).save(root / img_name)

            gaze = np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 1.0])
            gaze = gaze / np.linalg.norm(gaze)
            kwargs = {"user_id": f"user{i % 2}"}
            if gaze_form == "direction":
                kwargs["gaze_direction"] = gaze.tolist()
            else:
                origin = t.copy()
                kwargs["gaze_origin"] = origin.tolist()
                kwargs["gaze_target"] = (origin + 400.0 * gaze).tolist()
            lines.append(make_sample_line(f"s{i:03d}", img_name, lm, **kwargs))
            truths.append(
                {"yaw": yaw, "pitch": pitch, "rotation": rot, "translation": t, "gaze": gaze}
            )
        manifest = root / "manifest.jsonl"
        manifest.write_text("\n".join(lines) + "\n")
        return manifest, truths

    return build
