"""Dataset orchestration: manifest ingest, batch augmentation, histogram
stats, prediction evaluation, and single-sample preview.

Manifests are line-delimited JSON, one sample per line, so ingestion is
O(1) in memory and an interrupted augmentation run can resume by
re-reading its own output. See README for the exact record schemas.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .augment import (
    AugmentationParams,
    apply_augmentation,
    correct_gaze_to_base,
    make_rng_stream,
    make_virtual_camera,
    sample_head_pose,
)
from .camera import CameraIntrinsics, undistort_points
from .facemesh import FaceModel, build_textured_mesh, eye_center
from .geometry import AnglePair, angular_error, unit
from .pnp import PnPProblem, solve_pnp
from .render import render, write_png

__all__ = [
    "EvalReport",
    "RunError",
    "SampleRecord",
    "angles_from_direction",
    "augment_dataset",
    "evaluate",
    "format_eval_report",
    "ingest_manifest",
    "preview_sample",
    "stats_table",
    "write_stats_table",
]

STATS_BIN_DEG = 2.0
STATS_RANGE_DEG = 90.0
_FAILURE_ABORT_FRACTION = 0.5


class RunError(Exception):
    """A failure that invalidates the whole run (exit code 1 at the CLI)."""


@dataclass(frozen=True)
class SampleRecord:
    """One ingested dataset sample.

    gaze_direction is always present and unit-norm; when the manifest
    provided a gaze target instead, the direction was derived at ingest
    as normalize(target - origin).
    """

    sample_id: str
    image_path: str
    landmarks: np.ndarray
    intrinsics: CameraIntrinsics
    gaze_direction: np.ndarray
    gaze_origin: np.ndarray = None
    user_id: str = None


def _parse_vec3(raw, name: str) -> np.ndarray:
    v = np.asarray(raw, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be 3 finite numbers")
    return v


def _parse_sample(doc: dict) -> SampleRecord:
    if not isinstance(doc, dict):
        raise ValueError("record must be a JSON object")
    for key in ("sample_id", "image_path", "landmarks", "intrinsics"):
        if key not in doc:
            raise ValueError(f"missing required field '{key}'")
    sample_id = str(doc["sample_id"])
    if not sample_id:
        raise ValueError("sample_id must be non-empty")

    lm = np.asarray(doc["landmarks"], dtype=float)
    if lm.ndim != 2 or lm.shape[1] != 2 or lm.shape[0] < 1:
        raise ValueError("landmarks must be an Nx2 array")
    if not np.all(np.isfinite(lm)):
        raise ValueError("landmarks must be finite")

    intr = doc["intrinsics"]
    if not isinstance(intr, dict):
        raise ValueError("intrinsics must be an object")
    for key in ("fx", "fy", "cx", "cy"):
        if key not in intr:
            raise ValueError(f"intrinsics missing '{key}'")
    try:
        cam = CameraIntrinsics(
            fx=float(intr["fx"]),
            fy=float(intr["fy"]),
            cx=float(intr["cx"]),
            cy=float(intr["cy"]),
            dist=np.asarray(intr.get("dist", []), dtype=float),
        )
    except ValueError as e:
        raise ValueError(f"bad intrinsics: {e}") from e

    has_target = doc.get("gaze_target") is not None
    has_direction = doc.get("gaze_direction") is not None
    if has_target and has_direction:
        raise ValueError("both gaze_target and gaze_direction present; exactly one allowed")
    if not has_target and not has_direction:
        raise ValueError("one of gaze_target or gaze_direction is required")

    origin = None
    if doc.get("gaze_origin") is not None:
        origin = _parse_vec3(doc["gaze_origin"], "gaze_origin")
    if has_target:
        target = _parse_vec3(doc["gaze_target"], "gaze_target")
        if origin is None:
            raise ValueError("gaze_target requires gaze_origin")
        delta = target - origin
        if np.linalg.norm(delta) < 1e-12:
            raise ValueError("gaze_target coincides with gaze_origin")
        direction = unit(delta)
    else:
        direction = _parse_vec3(doc["gaze_direction"], "gaze_direction")
        if np.linalg.norm(direction) < 1e-12:
            raise ValueError("gaze_direction must be nonzero")
        direction = unit(direction)

    user = doc.get("user_id")
    return SampleRecord(
        sample_id=sample_id,
        image_path=str(doc["image_path"]),
        landmarks=lm,
        intrinsics=cam,
        gaze_direction=direction,
        gaze_origin=origin,
        user_id=None if user is None else str(user),
    )


def ingest_manifest(path) -> tuple[list[SampleRecord], list[str]]:
    """Read a line-delimited manifest; returns (records, error strings).

    Invalid lines never abort the read: each contributes one
    "line N: reason" entry. Relative image paths are resolved against
    the manifest's own directory.
    """
    p = Path(path)
    if not p.is_file():
        raise RunError(f"manifest not found: {p}")
    base = p.resolve().parent
    records: list[SampleRecord] = []
    errors: list[str] = []
    with open(p) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                rec = _parse_sample(doc)
            except (ValueError, TypeError) as e:
                errors.append(f"line {line_no}: {e}")
                continue
            img = Path(rec.image_path)
            if not img.is_absolute():
                rec = replace(rec, image_path=str(base / img))
            records.append(rec)
    return records, errors


def _face_model_checksum(model: FaceModel) -> str:
    """Content hash of the model, independent of file formatting."""
    doc = {
        "name": model.name,
        "vertices": model.vertices.tolist(),
        "triangles": None if model.triangles is None else model.triangles.tolist(),
        "left_eye_indices": model.left_eye_indices.tolist(),
        "right_eye_indices": model.right_eye_indices.tolist(),
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _metadata_text(model: FaceModel, params: AugmentationParams, channels: str, background: int) -> str:
    doc = {
        "d_n": params.d_n,
        "f_n": params.f_n,
        "patch_width": params.patch_width,
        "patch_height": params.patch_height,
        "mean_yaw": params.distribution.mean_yaw,
        "mean_pitch": params.distribution.mean_pitch,
        "var_yaw": params.distribution.var_yaw,
        "var_pitch": params.distribution.var_pitch,
        "seed": int(params.seed),
        "channels": channels,
        "background": int(background),
        "face_model_checksum": _face_model_checksum(model),
        "tool_version": __version__,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _load_image(path: str) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        return np.asarray(im)


def _read_done_keys(records_path: Path) -> set[tuple[str, int]]:
    """(sample_id, copy_index) pairs already present in an output manifest.

    An unterminated final line (crash artifact) is truncated away with a
    warning so appended records land on a clean line boundary; a corrupt
    line anywhere else fails the run.
    """
    done: set[tuple[str, int]] = set()
    data = records_path.read_bytes()
    if not data:
        return done
    text = data.decode()
    lines = text.split("\n")
    unterminated = lines[-1] if not text.endswith("\n") else None
    body = lines[:-1]
    for i, line in enumerate(body, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            done.add((str(doc["sample_id"]), int(doc["copy_index"])))
        except (ValueError, KeyError, TypeError) as e:
            raise RunError(f"existing records file is corrupt at line {i}: {e}") from e
    if unterminated and unterminated.strip():
        warnings.warn("dropping unterminated final line of existing records file")
        records_path.write_bytes(data[: data.rfind(b"\n") + 1])
    return done


def _augment_one_sample(
    sample: SampleRecord,
    sample_index: int,
    model: FaceModel,
    params: AugmentationParams,
    copies: int,
    channels: str,
    background: int,
    done: set[tuple[str, int]],
    params_ref: str,
) -> list[tuple[dict, list[tuple[str, np.ndarray]]]]:
    """All not-yet-done copies for one sample.

    Returns (record dict, [(relative patch path, patch image), ...])
    pairs; nothing is written here, so a failure leaves no partial
    output for this sample.
    """
    image = _load_image(sample.image_path)
    h, w = image.shape[0], image.shape[1]
    cam = sample.intrinsics
    bound = 10.0 * max(w, h)
    if not (-bound <= cam.cx <= bound and -bound <= cam.cy <= bound):
        raise ValueError(f"principal point ({cam.cx}, {cam.cy}) implausible for a {w}x{h} image")
    if sample.landmarks.shape[0] != model.vertices.shape[0]:
        raise ValueError(
            f"{sample.landmarks.shape[0]} landmarks but the face model has "
            f"{model.vertices.shape[0]} vertices"
        )

    undistorted = undistort_points(cam, sample.landmarks)
    solution = solve_pnp(PnPProblem(model.vertices, undistorted, cam))
    if not solution.converged:
        raise ValueError(f"pose estimation did not converge (rms {solution.rms_residual:.2f} px)")

    mesh = build_textured_mesh(model, sample.landmarks, image)
    gaze_base = correct_gaze_to_base(solution.pose, sample.gaze_direction)

    out = []
    rng = make_rng_stream(params.seed, sample_index)
    for copy_index in range(copies):
        # always draw, even when resuming past this copy, so the stream
        # position matches an uninterrupted run
        angles = sample_head_pose(params.distribution, rng)
        if (sample.sample_id, copy_index) in done:
            continue
        rmesh, gaze_aug, rot = apply_augmentation(mesh, gaze_base, angles)

        patches = []
        patch_paths = {}
        for side, tag in (("left", "L"), ("right", "R")):
            ec = eye_center(rmesh.vertices, model, side)
            vcam = make_virtual_camera(ec, params)
            patch = render(rmesh, vcam, background=background, channels=channels)
            rel = f"patches/{sample.sample_id}_{tag}_{copy_index}.png"
            patches.append((rel, patch))
            patch_paths[side] = rel

        record = {
            "sample_id": sample.sample_id,
            "copy_index": copy_index,
            "left_patch_path": patch_paths["left"],
            "right_patch_path": patch_paths["right"],
            "head_pose_yaw_pitch": [angles.yaw, angles.pitch],
            "head_pose_matrix": rot.tolist(),
            "gaze": unit(gaze_aug).tolist(),
            "params_ref": params_ref,
            "user_id": sample.user_id,
        }
        out.append((record, patches))
    return out


def augment_dataset(
    samples: list[SampleRecord],
    model: FaceModel,
    params: AugmentationParams,
    out_dir,
    copies: int = 1,
    channels: str = "gray",
    background: int = 0,
) -> dict:
    """Run the full augmentation batch into out_dir.

    Layout: out_dir/metadata (JSON), out_dir/records (one JSON record
    per line), out_dir/patches/<sample>_<L|R>_<copy>.png. Reruns with
    identical parameters resume: already-present (sample_id, copy_index)
    pairs are skipped and the final records file matches an
    uninterrupted run as a set. Per-sample failures are skipped and
    reported; more than half the samples failing aborts the run.

    Returns a summary dict: written, resumed, failures (list of
    (sample_id, reason)).
    """
    if copies < 1:
        raise RunError("copies must be >= 1")
    if not samples:
        raise RunError("no valid samples to augment")
    out = Path(out_dir)
    (out / "patches").mkdir(parents=True, exist_ok=True)

    meta_text = _metadata_text(model, params, channels, background)
    meta_path = out / "metadata"
    if meta_path.exists():
        if json.loads(meta_path.read_text()) != json.loads(meta_text):
            raise RunError(
                f"{meta_path} holds different run parameters; refusing to mix outputs"
            )
    else:
        meta_path.write_text(meta_text)
    params_ref = hashlib.sha256(meta_text.encode()).hexdigest()

    records_path = out / "records"
    done = _read_done_keys(records_path) if records_path.exists() else set()

    n_total = len(samples)
    failures: list[tuple[str, str]] = []
    written = 0
    resumed = 0
    with open(records_path, "a") as records_f:
        for index, sample in enumerate(samples):
            already = sum(1 for c in range(copies) if (sample.sample_id, c) in done)
            if already == copies:
                resumed += copies
                continue
            try:
                products = _augment_one_sample(
                    sample, index, model, params, copies, channels, background,
                    done, params_ref,
                )
            except (ValueError, OSError) as e:
                failures.append((sample.sample_id, str(e)))
                if len(failures) * 2 > n_total:
                    raise RunError(
                        f"aborting: {len(failures)} of {n_total} samples failed "
                        f"(last: {sample.sample_id}: {e})"
                    ) from e
                continue
            for record, patches in products:
                for rel, patch in patches:
                    write_png(patch, out / rel)
                records_f.write(json.dumps(record, sort_keys=True) + "\n")
                records_f.flush()
                written += 1
            resumed += already
    return {"written": written, "resumed": resumed, "failures": failures}


def angles_from_direction(direction: np.ndarray) -> tuple[float, float]:
    """(yaw, pitch) degrees of a direction, matching the head-pose
    convention: rotation_from_yaw_pitch(yaw, pitch) applied to +z gives
    the direction back. +z maps to (0, 0).
    """
    d = unit(np.asarray(direction, dtype=float).reshape(3))
    yaw = math.degrees(math.asin(min(1.0, max(-1.0, d[0]))))
    pitch = math.degrees(math.atan2(-d[1], d[2]))
    return yaw, pitch


def _iter_json_lines(path):
    p = Path(path)
    if not p.is_file():
        raise RunError(f"input not found: {p}")
    with open(p) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            yield line_no, line


def stats_table(path) -> tuple[np.ndarray, np.ndarray, int, list[str]]:
    """Histogram gaze and head-pose angles from a manifest or a records file.

    Returns (bin_centers_deg, counts (bins, 4), n_records, errors) with
    count columns gaze_yaw, gaze_pitch, head_yaw, head_pitch. Bins are
    2 degrees wide with centers on even degrees -90..90 (so 0 deg is a
    bin center); values outside are not counted. Raw manifest samples
    carry no head pose, so their head columns stay 0.
    """
    edges = np.arange(-STATS_RANGE_DEG - 1, STATS_RANGE_DEG + 2, STATS_BIN_DEG)
    centers = (edges[:-1] + edges[1:]) / 2.0
    gaze_angles: list[tuple[float, float]] = []
    head_angles: list[tuple[float, float]] = []
    errors: list[str] = []
    n_records = 0

    for line_no, line in _iter_json_lines(path):
        try:
            doc = json.loads(line)
            if not isinstance(doc, dict):
                raise ValueError("record must be a JSON object")
            if "head_pose_yaw_pitch" in doc and "gaze" in doc:
                yp = doc["head_pose_yaw_pitch"]
                head_angles.append((float(yp[0]), float(yp[1])))
                gaze_angles.append(angles_from_direction(_parse_vec3(doc["gaze"], "gaze")))
            else:
                rec = _parse_sample(doc)
                gaze_angles.append(angles_from_direction(rec.gaze_direction))
        except (ValueError, TypeError, KeyError, IndexError) as e:
            errors.append(f"line {line_no}: {e}")
            continue
        n_records += 1

    counts = np.zeros((centers.size, 4), dtype=int)
    series = [
        [a[0] for a in gaze_angles],
        [a[1] for a in gaze_angles],
        [a[0] for a in head_angles],
        [a[1] for a in head_angles],
    ]
    for col, values in enumerate(series):
        if values:
            counts[:, col] = np.histogram(np.asarray(values), bins=edges)[0]
    return centers, counts, n_records, errors


def write_stats_table(path, out_path) -> tuple[int, list[str]]:
    """Write the stats histogram as a TSV file; returns (n_records, errors)."""
    centers, counts, n_records, errors = stats_table(path)
    lines = ["bin_center_deg\tgaze_yaw_count\tgaze_pitch_count\thead_yaw_count\thead_pitch_count"]
    for i, c in enumerate(centers):
        lines.append(f"{c:g}\t{counts[i, 0]}\t{counts[i, 1]}\t{counts[i, 2]}\t{counts[i, 3]}")
    Path(out_path).write_text("\n".join(lines) + "\n")
    return n_records, errors


def _read_gaze_file(path) -> tuple[dict[str, np.ndarray], dict[str, str], list[str]]:
    """sample_id -> gaze direction (plus user ids) from any record file.

    Accepts augmented records ("gaze"), manifest samples
    ("gaze_direction" or "gaze_target"+"gaze_origin"), or minimal
    prediction lines {"sample_id", "gaze"}. Later duplicates win.
    """
    gazes: dict[str, np.ndarray] = {}
    users: dict[str, str] = {}
    errors: list[str] = []
    for line_no, line in _iter_json_lines(path):
        try:
            doc = json.loads(line)
            if not isinstance(doc, dict) or "sample_id" not in doc:
                raise ValueError("record must be an object with sample_id")
            sid = str(doc["sample_id"])
            if doc.get("gaze") is not None:
                g = _parse_vec3(doc["gaze"], "gaze")
            elif doc.get("gaze_direction") is not None:
                g = _parse_vec3(doc["gaze_direction"], "gaze_direction")
            elif doc.get("gaze_target") is not None and doc.get("gaze_origin") is not None:
                g = _parse_vec3(doc["gaze_target"], "gaze_target") - _parse_vec3(
                    doc["gaze_origin"], "gaze_origin"
                )
            else:
                raise ValueError("no gaze found (need gaze, gaze_direction, or target+origin)")
            if np.linalg.norm(g) < 1e-12:
                raise ValueError("gaze must be nonzero")
            gazes[sid] = g
            if doc.get("user_id") is not None:
                users[sid] = str(doc["user_id"])
        except (ValueError, TypeError) as e:
            errors.append(f"line {line_no}: {e}")
    return gazes, users, errors


@dataclass(frozen=True)
class EvalReport:
    mean_deg: float
    median_deg: float
    per_user_mean_deg: dict
    n_matched: int
    unmatched_pred: list
    unmatched_truth: list


def evaluate(pred_path, truth_path) -> EvalReport:
    """Angular error of predictions against ground truth, joined on
    sample_id. Unmatched ids on either side are reported, and an empty
    intersection fails the run.
    """
    pred, _, pred_errors = _read_gaze_file(pred_path)
    truth, users, truth_errors = _read_gaze_file(truth_path)
    for msg in pred_errors:
        warnings.warn(f"predictions {msg}")
    for msg in truth_errors:
        warnings.warn(f"truth {msg}")

    matched = sorted(set(pred) & set(truth))
    if not matched:
        raise RunError("no sample_ids in common between predictions and truth")

    errors = {sid: angular_error(pred[sid], truth[sid]) for sid in matched}
    values = np.array([errors[sid] for sid in matched])

    per_user: dict[str, float] = {}
    by_user: dict[str, list[float]] = {}
    for sid in matched:
        if sid in users:
            by_user.setdefault(users[sid], []).append(errors[sid])
    for uid in sorted(by_user):
        per_user[uid] = float(np.mean(by_user[uid]))

    return EvalReport(
        mean_deg=float(values.mean()),
        median_deg=float(np.median(values)),
        per_user_mean_deg=per_user,
        n_matched=len(matched),
        unmatched_pred=sorted(set(pred) - set(truth)),
        unmatched_truth=sorted(set(truth) - set(pred)),
    )


def format_eval_report(report: EvalReport) -> str:
    """Two-decimal text report, one metric per line."""
    lines = [
        f"samples\t{report.n_matched}",
        f"mean_deg\t{report.mean_deg:.2f}",
        f"median_deg\t{report.median_deg:.2f}",
    ]
    for uid, mean in report.per_user_mean_deg.items():
        lines.append(f"user_mean_deg\t{uid}\t{mean:.2f}")
    return "\n".join(lines)


PREVIEW_SIZE_PX = 256


def preview_sample(
    sample: SampleRecord,
    model: FaceModel,
    params: AugmentationParams,
    out_png,
    channels: str = "gray",
    background: int = 0,
) -> dict:
    """Render one sample re-posed at the distribution mean, full face.

    Writes a PREVIEW_SIZE_PX square render through a virtual camera
    centered on the transformed face centroid and returns a detail dict
    with the pose, the camera, and the projected vertex positions
    (useful as alignment ground truth for downstream tooling).
    """
    image = _load_image(sample.image_path)
    if sample.landmarks.shape[0] != model.vertices.shape[0]:
        raise ValueError(
            f"{sample.landmarks.shape[0]} landmarks but the face model has "
            f"{model.vertices.shape[0]} vertices"
        )
    undistorted = undistort_points(sample.intrinsics, sample.landmarks)
    solution = solve_pnp(PnPProblem(model.vertices, undistorted, sample.intrinsics))
    if not solution.converged:
        raise ValueError(f"pose estimation did not converge (rms {solution.rms_residual:.2f} px)")

    mesh = build_textured_mesh(model, sample.landmarks, image)
    gaze_base = correct_gaze_to_base(solution.pose, sample.gaze_direction)
    angles = AnglePair(params.distribution.mean_yaw, params.distribution.mean_pitch)
    rmesh, gaze_aug, rot = apply_augmentation(mesh, gaze_base, angles)

    view = replace(params, patch_width=PREVIEW_SIZE_PX, patch_height=PREVIEW_SIZE_PX)
    centroid = rmesh.vertices.mean(axis=0)
    vcam = make_virtual_camera(centroid, view)
    img = render(rmesh, vcam, background=background, channels=channels)
    write_png(img, out_png)

    landmarks_px = vcam.project(rmesh.vertices)
    return {
        "sample_id": sample.sample_id,
        "yaw": angles.yaw,
        "pitch": angles.pitch,
        "gaze": unit(gaze_aug).tolist(),
        "camera": {
            "origin": vcam.origin.tolist(),
            "fx": vcam.intrinsics.fx,
            "fy": vcam.intrinsics.fy,
            "cx": vcam.intrinsics.cx,
            "cy": vcam.intrinsics.cy,
            "width": vcam.width,
            "height": vcam.height,
        },
        "landmarks_px": landmarks_px.tolist(),
        "image": str(out_png),
    }
