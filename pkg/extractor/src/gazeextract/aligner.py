"""Landmark alignment strategies.

The only built-in aligner fits a homography between a reference face
template and the input image with OpenCV's ECC maximization, then maps the
template's landmark set through the recovered transform.  It works for
datasets where every frame shows a face in roughly frontal pose against a
consistent background (screen-target rigs, driver monitors).  Detection
across large pose or identity changes is out of scope; plug in a different
aligner for that.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np


class AlignmentError(Exception):
    """Raised when an aligner cannot be constructed from its inputs."""


def _load_gray(path: Path) -> np.ndarray:
    img = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if img is None:
        raise AlignmentError(f"cannot read image: {path}")
    return img


class TemplateAligner:
    """Dense template registration with a homography motion model.

    The template image and its landmark coordinates define the topology;
    every aligned image yields exactly ``len(landmarks)`` points, in the
    template's ordering.
    """

    def __init__(self, template: np.ndarray, landmarks: np.ndarray) -> None:
        if template.ndim != 2:
            raise AlignmentError("template image must be single channel")
        landmarks = np.asarray(landmarks, dtype=np.float64)
        if landmarks.ndim != 2 or landmarks.shape[1] != 2 or len(landmarks) < 4:
            raise AlignmentError("template landmarks must be an (N, 2) array, N >= 4")
        self._template = template.astype(np.float32) / 255.0
        self._landmarks = landmarks

    @classmethod
    def from_files(cls, image_path: Path, landmarks_path: Path) -> "TemplateAligner":
        import json

        template = _load_gray(image_path)
        try:
            pts = json.loads(Path(landmarks_path).read_text())
        except (OSError, ValueError) as exc:
            raise AlignmentError(f"cannot read template landmarks: {exc}") from exc
        return cls(template, np.asarray(pts, dtype=np.float64))

    @property
    def landmark_count(self) -> int:
        return len(self._landmarks)

    def align(self, image: np.ndarray) -> np.ndarray | None:
        """Return landmarks located in ``image``, or None if no face is found.

        ECC either converges to a warp or raises; a failure to converge is
        reported as "no face" rather than an error so that one bad frame
        never aborts a batch run.
        """
        if image.ndim != 2:
            raise AlignmentError("input image must be single channel")
        src = image.astype(np.float32) / 255.0
        warp = np.eye(3, dtype=np.float32)
        criteria = (cv2.TERM_CRITERIA_EPS | cv2.TERM_CRITERIA_COUNT, 200, 1e-7)
        try:
            ecc, warp = cv2.findTransformECC(
                self._template, src, warp, cv2.MOTION_HOMOGRAPHY, criteria
            )
        except cv2.error:
            return None
        if not np.isfinite(ecc) or ecc <= 0.0:
            return None
        # findTransformECC returns the warp that pulls the input onto the
        # template (template(x) ~ input(W x)), so W sends template
        # coordinates into the input image.
        h = warp.astype(np.float64)
        ones = np.ones((len(self._landmarks), 1))
        pts = np.hstack([self._landmarks, ones]) @ h.T
        if np.any(np.abs(pts[:, 2]) < 1e-12):
            return None
        return pts[:, :2] / pts[:, 2:3]
