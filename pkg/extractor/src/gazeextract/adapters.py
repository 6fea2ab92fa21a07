"""Dataset-specific gaze annotation adapters.

Every gaze dataset stores its ground truth differently; an adapter turns
whatever sits next to an image into the gaze fields of a manifest record.
An adapter returns a dict to merge into the record (one of
``gaze_direction`` or ``gaze_target`` + ``gaze_origin``, plus an optional
``user_id``), or None when the image carries no annotation.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable

Adapter = Callable[[Path], "dict | None"]

_GAZE_KEYS = ("gaze_direction", "gaze_target", "gaze_origin", "user_id")


def sidecar_gaze(image_path: Path) -> dict | None:
    """Read gaze truth from ``<image>.gaze.json`` next to the image.

    The sidecar holds the gaze fields verbatim in manifest form.  Unknown
    keys are dropped rather than forwarded so that a stray field in a
    sidecar cannot leak into the manifest.
    """
    sidecar = image_path.with_name(image_path.name + ".gaze.json")
    if not sidecar.exists():
        return None
    try:
        raw = json.loads(sidecar.read_text())
    except (OSError, ValueError):
        return None
    if not isinstance(raw, dict):
        return None
    out = {k: raw[k] for k in _GAZE_KEYS if k in raw}
    if "gaze_direction" not in out and "gaze_target" not in out:
        return None
    return out


ADAPTERS: dict[str, Adapter] = {
    "sidecar": sidecar_gaze,
}


def get_adapter(name: str) -> Adapter:
    try:
        return ADAPTERS[name]
    except KeyError:
        known = ", ".join(sorted(ADAPTERS))
        raise KeyError(f"unknown dataset adapter '{name}' (known: {known})") from None
