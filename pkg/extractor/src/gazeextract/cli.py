"""Command line front end.

    gazeextract extract --images 'frames/*.png' --intrinsics cam.json \
        --out manifest.jsonl --template-image ref.png \
        --template-landmarks ref_landmarks.json

Exit codes: 0 success (skipped images are reported, not fatal), 1 runtime
failure, 2 bad arguments.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .extract import ExtractionConfig, ExtractionError, run_extract


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazeextract",
        description="extract facial landmarks into a regaze dataset manifest",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="process a batch of images")
    ex.add_argument("--images", required=True, help="glob for input images")
    ex.add_argument(
        "--intrinsics",
        required=True,
        type=Path,
        help="JSON file with dataset camera intrinsics (fx, fy, cx, cy[, dist]); "
        "a per-image <name>.intrinsics.json sidecar overrides it",
    )
    ex.add_argument("--out", required=True, type=Path, help="manifest file to write")
    ex.add_argument(
        "--dataset-adapter",
        default="sidecar",
        help="gaze annotation adapter (default: sidecar, reads <image>.gaze.json)",
    )
    ex.add_argument(
        "--aligner", default="template", help="landmark aligner (default: template)"
    )
    ex.add_argument(
        "--template-image",
        required=True,
        type=Path,
        help="reference face image for the template aligner",
    )
    ex.add_argument(
        "--template-landmarks",
        required=True,
        type=Path,
        help="JSON [[x, y], ...] landmark coordinates on the template image",
    )
    ex.add_argument(
        "--landmark-count",
        type=int,
        default=None,
        help="expected landmark count (the target face model's vertex count); "
        "extraction refuses to start on a mismatch",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    config = ExtractionConfig(
        images=args.images,
        intrinsics_path=args.intrinsics,
        out_path=args.out,
        template_image=args.template_image,
        template_landmarks=args.template_landmarks,
        dataset_adapter=args.dataset_adapter,
        aligner=args.aligner,
        landmark_count=args.landmark_count,
    )
    try:
        summary = run_extract(config)
    except (ExtractionError, KeyError, OSError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return 1
    for path, reason in summary.skipped:
        print(f"skipped {path}: {reason}", file=sys.stderr)
    print(
        f"extracted {summary.written} record(s), "
        f"skipped {len(summary.skipped)} image(s)",
        file=sys.stderr,
    )
    print(f"wrote {config.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
