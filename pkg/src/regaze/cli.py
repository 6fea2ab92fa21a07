"""Command-line interface.

Exit codes: 0 success, 1 run failure (bad data, failed batch),
2 argument errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .augment import AugmentationParams, HeadPoseDistribution
from .facemesh import load_face_model
from .pipeline import (
    RunError,
    augment_dataset,
    evaluate,
    format_eval_report,
    ingest_manifest,
    preview_sample,
    write_stats_table,
)


def _parse_patch(text: str) -> tuple[int, int]:
    """Parse HxW ('64x96' means 64 high, 96 wide)."""
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected HxW like 64x96, got {text!r}")
    try:
        h, w = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in HxW, got {text!r}") from None
    if h <= 0 or w <= 0:
        raise argparse.ArgumentTypeError("patch dimensions must be positive")
    return h, w


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regaze",
        description="Augment gaze datasets by re-posing textured face meshes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_aug = sub.add_parser("augment", help="augment a dataset manifest into eye patches")
    p_aug.add_argument("--manifest", required=True, help="line-delimited JSON sample manifest")
    p_aug.add_argument("--face-model", required=True, help="face model JSON file")
    p_aug.add_argument("--out", required=True, help="output directory")
    p_aug.add_argument("--mean-yaw", type=float, default=0.0, help="target yaw mean, deg")
    p_aug.add_argument("--mean-pitch", type=float, default=30.0, help="target pitch mean, deg")
    p_aug.add_argument("--var-yaw", type=float, default=10.0, help="yaw variance, deg^2")
    p_aug.add_argument("--var-pitch", type=float, default=10.0, help="pitch variance, deg^2")
    p_aug.add_argument("--dn", type=float, default=600.0, help="virtual camera distance, mm")
    p_aug.add_argument("--fn", type=float, default=650.0, help="virtual camera focal length, px")
    p_aug.add_argument(
        "--patch", type=_parse_patch, default=(64, 96),
        help="patch size as HEIGHTxWIDTH (default 64x96: 64 high, 96 wide)",
    )
    p_aug.add_argument("--copies", type=int, default=1, help="augmented copies per sample")
    p_aug.add_argument("--seed", type=int, default=42, help="master RNG seed (>= 0)")
    p_aug.add_argument("--channels", choices=["gray", "rgb"], default="gray")
    p_aug.add_argument("--background", type=int, default=0, help="background gray level 0-255")

    p_stats = sub.add_parser("stats", help="histogram gaze/head angles from a manifest or records file")
    p_stats.add_argument("--input", required=True)
    p_stats.add_argument("--out", required=True, help="output TSV path")

    p_eval = sub.add_parser("eval", help="angular error of predictions against ground truth")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--truth", required=True)

    p_prev = sub.add_parser("preview", help="render one augmented sample for inspection")
    p_prev.add_argument("--manifest", required=True)
    p_prev.add_argument("--face-model", required=True)
    p_prev.add_argument("--sample", required=True, help="sample_id to preview")
    p_prev.add_argument("--out", required=True, help="output PNG path")

    return parser


def _cmd_augment(args) -> int:
    if not 0 <= args.background <= 255:
        print("error: --background must be in [0, 255]", file=sys.stderr)
        return 2
    if args.copies < 1:
        print("error: --copies must be >= 1", file=sys.stderr)
        return 2
    if args.seed < 0:
        print("error: --seed must be >= 0", file=sys.stderr)
        return 2
    try:
        model = load_face_model(args.face_model)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    patch_h, patch_w = args.patch
    try:
        params = AugmentationParams(
            d_n=args.dn,
            f_n=args.fn,
            patch_width=patch_w,
            patch_height=patch_h,
            seed=args.seed,
            distribution=HeadPoseDistribution(
                mean_yaw=args.mean_yaw,
                mean_pitch=args.mean_pitch,
                var_yaw=args.var_yaw,
                var_pitch=args.var_pitch,
            ),
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    try:
        records, errors = ingest_manifest(args.manifest)
        for msg in errors:
            print(f"manifest {msg}", file=sys.stderr)
        if not records:
            print("error: no valid records in manifest", file=sys.stderr)
            return 1
        summary = augment_dataset(
            records,
            model,
            params,
            args.out,
            copies=args.copies,
            channels=args.channels,
            background=args.background,
        )
    except RunError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    for sid, reason in summary["failures"]:
        print(f"sample {sid} skipped: {reason}", file=sys.stderr)
    print(
        f"augmented {summary['written']} record(s) into {args.out} "
        f"({summary['resumed']} already present, {len(summary['failures'])} sample(s) failed)"
    )
    return 0


def _cmd_stats(args) -> int:
    try:
        n_records, errors = write_stats_table(args.input, args.out)
    except RunError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for msg in errors:
        print(f"input {msg}", file=sys.stderr)
    print(f"stats: {n_records} records, {len(errors)} errors", file=sys.stderr)
    if n_records == 0:
        print("error: no valid records", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


def _cmd_eval(args) -> int:
    try:
        report = evaluate(args.pred, args.truth)
    except RunError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for sid in report.unmatched_pred:
        print(f"prediction without truth: {sid}", file=sys.stderr)
    for sid in report.unmatched_truth:
        print(f"truth without prediction: {sid}", file=sys.stderr)
    print(format_eval_report(report))
    return 0


def _cmd_preview(args) -> int:
    try:
        model = load_face_model(args.face_model)
        records, errors = ingest_manifest(args.manifest)
        for msg in errors:
            print(f"manifest {msg}", file=sys.stderr)
        matches = [r for r in records if r.sample_id == args.sample]
        if not matches:
            print(f"error: sample {args.sample!r} not found in manifest", file=sys.stderr)
            return 1
        detail = preview_sample(matches[0], model, AugmentationParams(), args.out)
    except (RunError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(json.dumps(detail))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "augment": _cmd_augment,
        "stats": _cmd_stats,
        "eval": _cmd_eval,
        "preview": _cmd_preview,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
