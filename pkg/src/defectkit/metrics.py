"""Pixel-level evaluation, instance matching, iteration sweeps and
plateau detection.

Precision = tp/(tp+fp), Recall = tp/(tp+fn), F1 = 2PR/(P+R). The 0/0
edge rule is: both sides empty scores 1.0 (perfect agreement), an empty
prediction against non-empty ground truth scores 0.0.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from . import coco as coco_mod
from . import detections as det_mod


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other):
        return Confusion(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass(frozen=True)
class MetricPoint:
    iteration: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class SeriesPoint:
    iteration: int
    value: float


def pixel_confusion(pred, gt):
    """Per-pixel confusion counts between two equally sized masks."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ValueError(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = pred.size - tp - fp - fn
    return Confusion(tp, fp, fn, tn)


def precision(c):
    if c.tp + c.fp == 0:
        return 0.0 if c.fn > 0 else 1.0
    return c.tp / (c.tp + c.fp)


def recall(c):
    if c.tp + c.fn == 0:
        return 0.0 if c.fp > 0 else 1.0
    return c.tp / (c.tp + c.fn)


def f1(p, r):
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def _point(c, iteration=0):
    p, r = precision(c), recall(c)
    return MetricPoint(iteration=iteration, precision=p, recall=r, f1=f1(p, r))


def evaluate_dataset(preds, gt, score_threshold=0.7, nms_iou=0.5, average="micro"):
    """Filter, suppress, reconstruct masks and compare against ground truth.

    Returns (per_image, aggregate) where per_image maps image_id to a
    MetricPoint (iteration 0) and the aggregate micro-averages by summing
    confusions first; ``average="macro"`` averages the per-image ratios
    instead.
    """
    image_ids = {im.id for im in gt.images}
    for d in preds.detections:
        if d.image_id not in image_ids:
            raise ValueError(f"detection references unknown image_id {d.image_id}")
    kept = det_mod.nms(filter_by_score(preds, score_threshold), nms_iou)
    gt_masks = coco_mod.coco_to_masks(gt)
    per_image = {}
    confusions = []
    for im in gt.images:
        pred_mask = det_mod.detections_to_mask(kept.for_image(im.id), im.width, im.height)
        c = pixel_confusion(pred_mask, gt_masks[im.id])
        confusions.append(c)
        per_image[im.id] = _point(c)
    if average == "macro":
        pts = list(per_image.values())
        p = float(np.mean([pt.precision for pt in pts])) if pts else 1.0
        r = float(np.mean([pt.recall for pt in pts])) if pts else 1.0
        aggregate = MetricPoint(0, p, r, f1(p, r))
    else:
        total = sum(confusions, Confusion())
        aggregate = _point(total)
    return per_image, aggregate


def filter_by_score(preds, threshold):
    # re-exported here for pipeline readability
    return det_mod.filter_by_score(preds, threshold)


def match_instances(preds, gt, iou_threshold=0.5):
    """Greedy instance matching by descending score using mask IoU.

    A prediction matches the unmatched ground-truth annotation with the
    highest mask IoU if that IoU reaches the threshold; leftovers count as
    fp (predictions) and fn (annotations).
    """
    images = {im.id: im for im in gt.images}
    for d in preds.detections:
        if d.image_id not in images:
            raise ValueError(f"detection references unknown image_id {d.image_id}")
    gt_instances = []  # (image_id, mask)
    for a in gt.annotations:
        im = images[a.image_id]
        mask = np.zeros((im.height, im.width), dtype=bool)
        for poly in a.segmentation:
            pts = list(zip(poly[0::2], poly[1::2]))
            mask |= coco_mod.raster.rasterize_polygon(pts, im.width, im.height)
        gt_instances.append((a.image_id, mask))
    matched = [False] * len(gt_instances)
    tp = fp = 0
    order = sorted(range(len(preds.detections)), key=lambda i: (-preds.detections[i].score, i))
    for i in order:
        d = preds.detections[i]
        im = images[d.image_id]
        pred_mask = det_mod.detections_to_mask(
            det_mod.DetectionSet((d,)), im.width, im.height
        )
        best_iou, best_j = 0.0, None
        for j, (gid, gmask) in enumerate(gt_instances):
            if matched[j] or gid != d.image_id:
                continue
            inter = int(np.count_nonzero(pred_mask & gmask))
            union = int(np.count_nonzero(pred_mask | gmask))
            m_iou = inter / union if union else 0.0
            if m_iou > best_iou:
                best_iou, best_j = m_iou, j
        if best_j is not None and best_iou >= iou_threshold:
            matched[best_j] = True
            tp += 1
        else:
            fp += 1
    fn = matched.count(False)
    return tp, fp, fn


def sweep(runs, gt, score_threshold=0.7, nms_iou=0.5):
    """Aggregate MetricPoint per (iteration, DetectionSet) run, in order."""
    iterations = [it for it, _ in runs]
    if any(b <= a for a, b in zip(iterations, iterations[1:])):
        raise ValueError("iterations must be strictly increasing (no duplicates)")
    points = []
    for iteration, preds in runs:
        _, agg = evaluate_dataset(preds, gt, score_threshold, nms_iou)
        points.append(MetricPoint(iteration, agg.precision, agg.recall, agg.f1))
    return points


def find_plateau(series, mode="maximize", patience=2, min_delta=0.01):
    """Iteration of the best value once `patience` later points stop improving.

    A point improves when it beats the best seen so far by at least
    min_delta. Returns None if the series ends while still improving.
    """
    if patience < 1:
        raise ValueError("patience must be >= 1")
    if not series:
        raise ValueError("empty series")
    iters = [s.iteration for s in series]
    if any(b <= a for a, b in zip(iters, iters[1:])):
        raise ValueError("series iterations must be strictly increasing")
    if mode not in ("maximize", "minimize"):
        raise ValueError(f"mode must be maximize or minimize, got {mode!r}")
    sign = 1.0 if mode == "maximize" else -1.0
    best_value = sign * series[0].value
    best_iter = series[0].iteration
    stall = 0
    for point in series[1:]:
        value = sign * point.value
        if value - best_value >= min_delta:
            best_value = value
            best_iter = point.iteration
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                return best_iter
    return None


def metric_points_to_csv(points):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "precision", "recall", "f1"])
    for pt in points:
        writer.writerow([pt.iteration, repr(pt.precision), repr(pt.recall), repr(pt.f1)])
    return buf.getvalue()


def series_from_csv(text):
    """Parse an (iteration,value) CSV, header optional."""
    points = []
    for row in csv.reader(io.StringIO(text)):
        if not row:
            continue
        try:
            points.append(SeriesPoint(int(row[0]), float(row[1])))
        except ValueError:
            continue  # header row
    return points


def metric_points_to_json(points):
    return json.dumps(
        [
            {"iteration": pt.iteration, "precision": pt.precision, "recall": pt.recall, "f1": pt.f1}
            for pt in points
        ],
        indent=2,
    )
