"""Command-line front end: defect-exporter --model M --images DIR --out F."""

from __future__ import annotations

import argparse
import sys

from .export import ExportJob, export


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="defect-exporter",
        description="export model predictions as detections interchange JSON",
    )
    parser.add_argument("--model", required=True, help='model artifact (e.g. "stub" or "stub:<json>")')
    parser.add_argument("--images", required=True)
    parser.add_argument("--coco-ref", default=None, help="COCO file for image-id mapping")
    parser.add_argument("--score-floor", type=float, default=0.0)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        job = ExportJob(
            model_artifact=args.model,
            images=args.images,
            coco_ref=args.coco_ref,
            score_floor=args.score_floor,
        )
        text = export(job, out_path=args.out)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    import json

    n = len(json.loads(text)["detections"])
    print(f"{n} detections -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
