"""Batch extraction: images in, manifest lines out."""

from __future__ import annotations

import glob
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapters import get_adapter
from .aligner import AlignmentError, TemplateAligner, _load_gray


class ExtractionError(Exception):
    """Fatal configuration or I/O problem; per-image trouble never raises."""


@dataclass
class ExtractionConfig:
    images: str
    intrinsics_path: Path
    out_path: Path
    template_image: Path
    template_landmarks: Path
    dataset_adapter: str = "sidecar"
    aligner: str = "template"
    landmark_count: int | None = None


@dataclass
class ExtractionSummary:
    written: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)


_REQUIRED_INTRINSICS = ("fx", "fy", "cx", "cy")


def _load_intrinsics(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ExtractionError(f"cannot read intrinsics file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ExtractionError(f"intrinsics file {path} must hold a JSON object")
    for key in _REQUIRED_INTRINSICS:
        if key not in raw:
            raise ExtractionError(f"intrinsics file {path} missing '{key}'")
        try:
            float(raw[key])
        except (TypeError, ValueError):
            raise ExtractionError(
                f"intrinsics file {path}: '{key}' must be a number"
            ) from None
    out = {k: float(raw[k]) for k in _REQUIRED_INTRINSICS}
    if "dist" in raw:
        out["dist"] = [float(v) for v in raw["dist"]]
    return out


def _image_intrinsics(image_path: Path, default: dict) -> dict:
    """Per-image sidecar overrides the dataset-wide constant when present."""
    sidecar = image_path.with_name(image_path.name + ".intrinsics.json")
    if sidecar.exists():
        return _load_intrinsics(sidecar)
    return default


def run_extract(config: ExtractionConfig) -> ExtractionSummary:
    if config.aligner != "template":
        raise ExtractionError(f"unknown aligner '{config.aligner}'")
    adapter = get_adapter(config.dataset_adapter)
    default_intrinsics = _load_intrinsics(config.intrinsics_path)
    try:
        aligner = TemplateAligner.from_files(
            config.template_image, config.template_landmarks
        )
    except AlignmentError as exc:
        raise ExtractionError(str(exc)) from exc
    if (
        config.landmark_count is not None
        and aligner.landmark_count != config.landmark_count
    ):
        raise ExtractionError(
            f"template has {aligner.landmark_count} landmarks, "
            f"config declares {config.landmark_count}"
        )

    paths = sorted(Path(p) for p in glob.glob(config.images, recursive=True))
    if not paths:
        warnings.warn(f"no images match {config.images!r}; writing empty manifest")

    summary = ExtractionSummary()
    seen_ids: set[str] = set()
    config.out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(config.out_path, "w") as fh:
        for path in paths:
            record = _extract_one(path, aligner, adapter, default_intrinsics, summary)
            if record is None:
                continue
            sid = record["sample_id"]
            n = 2
            while record["sample_id"] in seen_ids:
                record["sample_id"] = f"{sid}-{n}"
                n += 1
            seen_ids.add(record["sample_id"])
            fh.write(json.dumps(record) + "\n")
            summary.written += 1
    return summary


def _extract_one(path, aligner, adapter, default_intrinsics, summary):
    try:
        image = _load_gray(path)
    except AlignmentError as exc:
        summary.skipped.append((str(path), str(exc)))
        return None
    try:
        intrinsics = _image_intrinsics(path, default_intrinsics)
    except ExtractionError as exc:
        summary.skipped.append((str(path), str(exc)))
        return None
    landmarks = aligner.align(image)
    if landmarks is None:
        summary.skipped.append((str(path), "no face found"))
        return None
    gaze = adapter(path)
    if gaze is None:
        summary.skipped.append((str(path), "no gaze annotation"))
        return None
    record = {
        "sample_id": path.stem,
        "image_path": str(path.resolve()),
        "landmarks": np.asarray(landmarks, dtype=float).tolist(),
        "intrinsics": intrinsics,
    }
    record.update(gaze)
    return record
