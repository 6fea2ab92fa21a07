"""Extractor behavior on synthetic scenes: skips, sidecars, CLI contract."""

import json
import subprocess
from pathlib import Path

import cv2
import numpy as np
import pytest

from exhelpers import apply_homography, smooth_texture, translation_h
from gazeextract.adapters import sidecar_gaze
from gazeextract.cli import main

POINTS = np.array(
    [[60.0, 50.0], [250.0, 55.0], [160.0, 190.0], [70.0, 170.0], [240.0, 180.0]]
)
INTR = {"fx": 500.0, "fy": 500.0, "cx": 160.0, "cy": 120.0, "dist": [0.05, 0.0]}


def make_scene(root: Path, n_images=1, seed=11):
    """One template plus n translated copies of it, with gaze sidecars.

    Returns the per-image truth landmark positions.
    """
    h, w = 240, 320
    base = smooth_texture(h, w, seed=seed)
    shift = translation_h(5.0, -3.0)
    # template(shift @ x) = base(x): template landmarks live at shift @ POINTS
    template = cv2.warpPerspective(base, shift.astype(np.float32), (w, h))
    cv2.imwrite(str(root / "template.png"), template)
    (root / "template_landmarks.json").write_text(
        json.dumps(apply_homography(shift, POINTS).tolist())
    )
    (root / "intrinsics.json").write_text(json.dumps(INTR))
    truths = {}
    for i in range(n_images):
        move = translation_h(3.0 * i, 2.0 * i)
        img = cv2.warpPerspective(base, move.astype(np.float32), (w, h))
        name = f"img_{i}.png"
        cv2.imwrite(str(root / name), img)
        (root / f"{name}.gaze.json").write_text(
            json.dumps({"gaze_direction": [0.0, 0.1, 1.0], "user_id": f"u{i}"})
        )
        truths[name] = apply_homography(move, POINTS)
    return truths


def extract_args(root: Path, images=None, **extra):
    args = [
        "extract",
        "--images", images if images is not None else str(root / "img_*.png"),
        "--intrinsics", str(root / "intrinsics.json"),
        "--out", str(root / "manifest.jsonl"),
        "--template-image", str(root / "template.png"),
        "--template-landmarks", str(root / "template_landmarks.json"),
    ]
    for flag, value in extra.items():
        args += [f"--{flag}", str(value)]
    return args


def read_manifest(root: Path):
    lines = (root / "manifest.jsonl").read_text().splitlines()
    return [json.loads(line) for line in lines]


def test_extract_happy_path(tmp_path, capsys):
    truths = make_scene(tmp_path, n_images=2)
    assert main(extract_args(tmp_path)) == 0
    captured = capsys.readouterr()
    assert "extracted 2 record(s), skipped 0 image(s)" in captured.err
    assert "wrote" in captured.out

    records = read_manifest(tmp_path)
    assert [r["sample_id"] for r in records] == ["img_0", "img_1"]
    for rec in records:
        name = Path(rec["image_path"]).name
        assert Path(rec["image_path"]).is_absolute()
        assert rec["intrinsics"] == INTR
        assert rec["gaze_direction"] == [0.0, 0.1, 1.0]
        assert rec["user_id"].startswith("u")
        got = np.array(rec["landmarks"])
        assert got.shape == (len(POINTS), 2)
        err = np.linalg.norm(got - truths[name], axis=1)
        assert float(np.sqrt((err**2).mean())) < 1.0


def test_cli_entry_point(tmp_path):
    make_scene(tmp_path, n_images=1)
    proc = subprocess.run(
        ["gazeextract"] + extract_args(tmp_path),
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "extracted 1 record(s), skipped 0 image(s)" in proc.stderr
    assert len(read_manifest(tmp_path)) == 1


def test_zero_images_writes_empty_manifest_and_warns(tmp_path, capsys):
    make_scene(tmp_path, n_images=0)
    with pytest.warns(UserWarning, match="no images"):
        code = main(extract_args(tmp_path, images=str(tmp_path / "nothing_*.png")))
    assert code == 0
    assert (tmp_path / "manifest.jsonl").read_text() == ""
    assert "extracted 0 record(s)" in capsys.readouterr().err


def test_unalignable_image_skipped_not_fatal(tmp_path, capsys):
    make_scene(tmp_path, n_images=1)
    flat = np.full((240, 320), 128, dtype=np.uint8)
    cv2.imwrite(str(tmp_path / "img_flat.png"), flat)
    (tmp_path / "img_flat.png.gaze.json").write_text(
        json.dumps({"gaze_direction": [0, 0, 1]})
    )
    assert main(extract_args(tmp_path)) == 0
    captured = capsys.readouterr()
    assert "img_flat.png: no face found" in captured.err
    assert "extracted 1 record(s), skipped 1 image(s)" in captured.err
    assert [r["sample_id"] for r in read_manifest(tmp_path)] == ["img_0"]


def test_missing_gaze_sidecar_skips(tmp_path, capsys):
    make_scene(tmp_path, n_images=1)
    (tmp_path / "img_0.png.gaze.json").unlink()
    assert main(extract_args(tmp_path)) == 0
    captured = capsys.readouterr()
    assert "img_0.png: no gaze annotation" in captured.err
    assert read_manifest(tmp_path) == []


def test_per_image_intrinsics_sidecar_overrides(tmp_path):
    make_scene(tmp_path, n_images=2)
    override = {"fx": 999.0, "fy": 998.0, "cx": 1.0, "cy": 2.0}
    (tmp_path / "img_1.png.intrinsics.json").write_text(json.dumps(override))
    assert main(extract_args(tmp_path)) == 0
    records = {r["sample_id"]: r for r in read_manifest(tmp_path)}
    assert records["img_0"]["intrinsics"] == INTR
    assert records["img_1"]["intrinsics"] == override


def test_unknown_adapter_fails(tmp_path, capsys):
    make_scene(tmp_path, n_images=1)
    assert main(extract_args(tmp_path, **{"dataset-adapter": "nope"})) == 1
    assert "unknown dataset adapter 'nope'" in capsys.readouterr().err


def test_unknown_aligner_fails(tmp_path, capsys):
    make_scene(tmp_path, n_images=1)
    assert main(extract_args(tmp_path, aligner="cascade")) == 1
    assert "unknown aligner 'cascade'" in capsys.readouterr().err


def test_landmark_count_gate(tmp_path, capsys):
    make_scene(tmp_path, n_images=1)
    assert main(extract_args(tmp_path, **{"landmark-count": 99})) == 1
    err = capsys.readouterr().err
    assert "template has 5 landmarks, config declares 99" in err
    # matching count passes the gate
    assert main(extract_args(tmp_path, **{"landmark-count": 5})) == 0


def test_bad_intrinsics_file_fails(tmp_path, capsys):
    make_scene(tmp_path, n_images=1)
    (tmp_path / "intrinsics.json").write_text(json.dumps({"fx": 1.0}))
    assert main(extract_args(tmp_path)) == 1
    assert "missing 'fy'" in capsys.readouterr().err


def test_duplicate_stems_get_unique_ids(tmp_path):
    make_scene(tmp_path, n_images=1)
    sub = tmp_path / "sub"
    sub.mkdir()
    for name in ("img_0.png", "img_0.png.gaze.json"):
        (sub / name).write_bytes((tmp_path / name).read_bytes())
    assert main(extract_args(tmp_path, images=str(tmp_path / "**" / "img_*.png"))) == 0
    ids = [r["sample_id"] for r in read_manifest(tmp_path)]
    assert sorted(ids) == ["img_0", "img_0-2"]


class TestSidecarAdapter:
    def test_missing_file(self, tmp_path):
        assert sidecar_gaze(tmp_path / "a.png") is None

    def test_bad_json(self, tmp_path):
        (tmp_path / "a.png.gaze.json").write_text("{nope")
        assert sidecar_gaze(tmp_path / "a.png") is None

    def test_not_an_object(self, tmp_path):
        (tmp_path / "a.png.gaze.json").write_text("[1, 2]")
        assert sidecar_gaze(tmp_path / "a.png") is None

    def test_no_gaze_fields(self, tmp_path):
        (tmp_path / "a.png.gaze.json").write_text(json.dumps({"user_id": "u"}))
        assert sidecar_gaze(tmp_path / "a.png") is None

    def test_target_origin_form(self, tmp_path):
        doc = {
            "gaze_target": [0.0, 0.0, 400.0],
            "gaze_origin": [10.0, 5.0, 30.0],
            "user_id": "u3",
        }
        (tmp_path / "a.png.gaze.json").write_text(json.dumps(doc))
        assert sidecar_gaze(tmp_path / "a.png") == doc

    def test_unknown_keys_dropped(self, tmp_path):
        doc = {"gaze_direction": [0, 0, 1], "frame_rate": 30}
        (tmp_path / "a.png.gaze.json").write_text(json.dumps(doc))
        assert sidecar_gaze(tmp_path / "a.png") == {"gaze_direction": [0, 0, 1]}
