"""Command-line front end wiring the pipeline stages together.

Subcommands follow the three-block flow: dataset preparation (convert,
split, validate), the built-in detector stand-in (detect), and assessment
(eval, sweep, overlay). Exit codes: 0 success, 1 data/validation error,
2 usage error.
"""

from __future__ import annotations

import argparse
import glob as globmod
import json
import os
import re
import sys
import tempfile
from dataclasses import dataclass, asdict

from . import baseline, coco, detections, imageio, metrics, render


@dataclass(frozen=True)
class RunConfig:
    """Trainer-facing configuration stub; defaults follow the reference setup."""

    base_lr: float = 0.05
    max_iter: int = 600
    num_classes: int = 1
    score_threshold: float = 0.7
    nms_iou: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.base_lr <= 0 or self.max_iter <= 0 or self.num_classes <= 0:
            raise ValueError("base_lr, max_iter and num_classes must be positive")
        if not (0 <= self.score_threshold <= 1 and 0 <= self.nms_iou <= 1):
            raise ValueError("thresholds must lie in [0, 1]")


def _write_atomic(path, text):
    """Write via temp file + rename so partial output never lands."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_atomic_bytes(path, writer):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


IMAGE_EXTS = (".png", ".pgm")


def _list_images(directory):
    names = sorted(
        n for n in os.listdir(directory) if n.lower().endswith(IMAGE_EXTS)
    )
    if not names:
        raise ValueError(f"no images (*.png, *.pgm) found in {directory}")
    return names


def _image_id_map(image_names, coco_path):
    """file_name -> image_id; from a COCO file when given, else directory order."""
    if coco_path:
        with open(coco_path) as f:
            ds = coco.parse_coco(f.read())
        by_name = {im.file_name: im.id for im in ds.images}
        missing = [n for n in image_names if n not in by_name]
        if missing:
            raise ValueError(f"images not present in {coco_path}: {', '.join(missing)}")
        return {n: by_name[n] for n in image_names}
    return {n: i for i, n in enumerate(image_names, start=1)}


def cmd_convert(args):
    image_names = _list_images(args.images)
    unmatched = [n for n in image_names if not os.path.exists(os.path.join(args.masks, n))]
    if unmatched:
        raise ValueError("missing mask for image(s): " + ", ".join(unmatched))
    entries = []
    for name in image_names:
        img = imageio.load_image(os.path.join(args.images, name))
        mask_img = imageio.load_image(os.path.join(args.masks, name))
        if mask_img.shape != img.shape:
            raise ValueError(
                f"dimension mismatch for {name}: image {img.shape[::-1]} vs mask {mask_img.shape[::-1]}"
            )
        h, w = img.shape
        entries.append((name, (w, h), mask_img > 127))
    ds = coco.masks_to_coco(entries, category_name=args.category)
    _write_atomic(args.out, coco.serialize_coco(ds))
    print(f"{len(ds.annotations)} annotations ({len(ds.images)} images) -> {args.out}")
    return 0


def cmd_split(args):
    with open(args.coco) as f:
        ds = coco.parse_coco(f.read())
    train, test = coco.split_dataset(ds, args.train_count, args.seed)
    _write_atomic(args.out_train, coco.serialize_coco(train))
    _write_atomic(args.out_test, coco.serialize_coco(test))
    config = RunConfig(seed=args.seed)
    config_path = args.out_config or os.path.join(
        os.path.dirname(os.path.abspath(args.out_train)), "run_config.json"
    )
    _write_atomic(config_path, json.dumps(asdict(config), indent=2))
    print(
        f"train: {len(train.images)} images, test: {len(test.images)} images; "
        f"config stub -> {config_path}"
    )
    return 0


def cmd_detect(args):
    image_names = _list_images(args.images)
    ids = _image_id_map(image_names, args.coco)
    params = baseline.BaselineParams(min_area=args.min_area, invert=args.invert)
    all_dets = []
    for name in image_names:
        img = imageio.load_image(os.path.join(args.images, name))
        found = baseline.detect_defects(img, params)
        for d in found.detections:
            all_dets.append(
                detections.Detection(
                    image_id=ids[name],
                    category_id=d.category_id,
                    score=d.score,
                    bbox=d.bbox,
                    segmentation=d.segmentation,
                )
            )
    detset = detections.DetectionSet(tuple(all_dets), source=args.source)
    _write_atomic(args.out, detections.serialize_detections(detset))
    print(f"{len(all_dets)} detections over {len(image_names)} images -> {args.out}")
    return 0


def _load_eval_inputs(coco_path, dets_path):
    with open(coco_path) as f:
        gt = coco.parse_coco(f.read())
    with open(dets_path) as f:
        preds = detections.parse_detections(f.read())
    return gt, preds


def cmd_eval(args):
    gt, preds = _load_eval_inputs(args.coco, args.dets)
    per_image, aggregate = metrics.evaluate_dataset(
        preds, gt, args.score_thresh, args.nms_iou, average=args.average
    )
    kept = detections.nms(
        detections.filter_by_score(preds, args.score_thresh), args.nms_iou
    )
    tp, fp, fn = metrics.match_instances(kept, gt, args.nms_iou)

    lines = ["image_id,precision,recall,f1"]
    for image_id in sorted(per_image):
        pt = per_image[image_id]
        lines.append(f"{image_id},{pt.precision!r},{pt.recall!r},{pt.f1!r}")
    lines.append(f"aggregate,{aggregate.precision!r},{aggregate.recall!r},{aggregate.f1!r}")
    _write_atomic(args.out, "\n".join(lines) + "\n")
    if args.out_json:
        doc = {
            "aggregate": {
                "precision": aggregate.precision,
                "recall": aggregate.recall,
                "f1": aggregate.f1,
            },
            "per_image": {
                str(i): {"precision": p.precision, "recall": p.recall, "f1": p.f1}
                for i, p in sorted(per_image.items())
            },
            "instances": {"tp": tp, "fp": fp, "fn": fn},
        }
        _write_atomic(args.out_json, json.dumps(doc, indent=2))
    print(
        f"precision {aggregate.precision:.4f}  recall {aggregate.recall:.4f}  "
        f"f1 {aggregate.f1:.4f}  (instances: tp={tp} fp={fp} fn={fn})"
    )
    return 0


_ITER_RE = re.compile(r"iter=(\d+)")


def _run_iteration(detset, path):
    m = _ITER_RE.search(detset.source)
    if m:
        return int(m.group(1))
    digits = re.findall(r"(\d+)", os.path.basename(path))
    if digits:
        return int(digits[-1])
    raise ValueError(f"cannot determine iteration for {path}: no iter=<N> source tag or filename digits")


def cmd_sweep(args):
    with open(args.coco) as f:
        gt = coco.parse_coco(f.read())
    paths = sorted(globmod.glob(args.dets_glob))
    if not paths:
        raise ValueError(f"no files match {args.dets_glob!r}")
    runs = []
    for path in paths:
        with open(path) as f:
            detset = detections.parse_detections(f.read())
        runs.append((_run_iteration(detset, path), detset))
    runs.sort(key=lambda r: r[0])
    points = metrics.sweep(runs, gt, args.score_thresh, args.nms_iou)
    _write_atomic(args.out, metrics.metric_points_to_csv(points))
    series = [metrics.SeriesPoint(pt.iteration, pt.f1) for pt in points]
    stop = metrics.find_plateau(series, "maximize", args.patience, args.min_delta)
    if stop is None:
        print(f"{len(points)} runs -> {args.out}; no plateau (still improving)")
    else:
        print(f"{len(points)} runs -> {args.out}; F1 plateau at iteration {stop}")
    return 0


def cmd_overlay(args):
    image_names = _list_images(args.images)
    ids = _image_id_map(image_names, args.coco)
    with open(args.dets) as f:
        detset = detections.parse_detections(f.read())
    names = {}
    if args.coco:
        with open(args.coco) as f:
            ds = coco.parse_coco(f.read())
        names = {c.id: c.name for c in ds.categories}
    os.makedirs(args.out, exist_ok=True)
    for name in image_names:
        img = imageio.load_image(os.path.join(args.images, name))
        rgb = render.overlay(img, detset.for_image(ids[name]), names)
        out_path = os.path.join(args.out, os.path.splitext(name)[0] + ".png")
        _write_atomic_bytes(out_path, lambda tmp: imageio.save_png(tmp, rgb))
    print(f"{len(image_names)} overlays -> {args.out}")
    return 0


def cmd_validate(args):
    with open(args.coco) as f:
        ds = coco.parse_coco(f.read())
    problems = coco.validate(ds)
    for p in problems:
        print(p)
    if problems:
        return 1
    print("ok")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="defectkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="ground-truth masks -> COCO JSON")
    p.add_argument("--images", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--category", default="defect")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("split", help="seeded train/test split of a COCO file")
    p.add_argument("--coco", required=True)
    p.add_argument("--train-count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--out-config", default=None)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("detect", help="run the built-in threshold detector")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--coco", default=None, help="COCO file for image-id mapping")
    p.add_argument("--min-area", type=int, default=3)
    p.add_argument("--invert", action="store_true")
    p.add_argument("--source", default="baseline-otsu")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="pixel metrics of detections vs ground truth")
    p.add_argument("--coco", required=True)
    p.add_argument("--dets", required=True)
    p.add_argument("--score-thresh", type=float, default=0.7)
    p.add_argument("--nms-iou", type=float, default=0.5)
    p.add_argument("--average", choices=("micro", "macro"), default="micro")
    p.add_argument("--out", required=True)
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="metric curve over per-iteration detection files")
    p.add_argument("--coco", required=True)
    p.add_argument("--dets-glob", required=True)
    p.add_argument("--score-thresh", type=float, default=0.7)
    p.add_argument("--nms-iou", type=float, default=0.5)
    p.add_argument("--patience", type=int, default=2)
    p.add_argument("--min-delta", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("overlay", help="render detection overlays as PNG")
    p.add_argument("--images", required=True)
    p.add_argument("--dets", required=True)
    p.add_argument("--coco", default=None, help="COCO file for ids and category names")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_overlay)

    p = sub.add_parser("validate", help="check a COCO file's structure")
    p.add_argument("--coco", required=True)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
