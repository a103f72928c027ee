"""Model-output data model and the deterministic detector geometry:
interchange JSON, IoU, score filtering, greedy NMS, anchor generation and
detection-to-mask reconstruction.

The interchange format decouples the evaluator from any particular model
backend: {"source": ..., "detections": [{"image_id", "category_id",
"score", "bbox", "segmentation"}, ...]}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import raster


class DetectionFormatError(ValueError):
    """Raised on interchange schema violations; message names the path."""


@dataclass(frozen=True)
class Detection:
    image_id: int
    category_id: int
    score: float
    bbox: tuple  # (x, y, w, h)
    segmentation: tuple = ()  # polygons as flat coordinate tuples; may be empty

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of [0,1]: {self.score}")
        if self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise ValueError(f"bbox width/height must be positive: {self.bbox}")
        for poly in self.segmentation:
            if len(poly) < 6 or len(poly) % 2 != 0:
                raise ValueError("segmentation polygon needs at least 3 points")


@dataclass(frozen=True)
class DetectionSet:
    detections: tuple = ()
    source: str = ""

    def for_image(self, image_id):
        return DetectionSet(
            tuple(d for d in self.detections if d.image_id == image_id), self.source
        )

    def __len__(self):
        return len(self.detections)


@dataclass(frozen=True)
class Anchor:
    center: tuple  # (cx, cy)
    scale: float
    aspect_ratio: float

    @property
    def box(self):
        """Anchor bbox (x, y, w, h); w*h == scale**2."""
        w = self.scale * math.sqrt(self.aspect_ratio)
        h = self.scale / math.sqrt(self.aspect_ratio)
        cx, cy = self.center
        return (cx - w / 2, cy - h / 2, w, h)

    def inside(self, width, height):
        x, y, w, h = self.box
        return x >= 0 and y >= 0 and x + w <= width and y + h <= height


def parse_detections(text):
    """Parse interchange JSON; schema errors name the offending path."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DetectionFormatError(f"malformed JSON: {e}") from e
    if not isinstance(doc, dict):
        raise DetectionFormatError("top level must be a JSON object")
    if "detections" not in doc:
        raise DetectionFormatError("missing required key detections")
    if not isinstance(doc["detections"], list):
        raise DetectionFormatError("wrong type at detections: expected array")
    source = doc.get("source", "")
    out = []
    for i, obj in enumerate(doc["detections"]):
        path = f"detections[{i}]"
        for key, types in (
            ("image_id", int),
            ("category_id", int),
            ("score", (int, float)),
            ("bbox", list),
            ("segmentation", list),
        ):
            if key not in obj:
                raise DetectionFormatError(f"missing required key {path}.{key}")
            if not isinstance(obj[key], types) or isinstance(obj[key], bool):
                raise DetectionFormatError(f"wrong type at {path}.{key}")
        score = obj["score"]
        if not 0.0 <= score <= 1.0:
            raise DetectionFormatError(f"score out of [0,1] at {path}.score: {score}")
        bbox = obj["bbox"]
        if len(bbox) != 4:
            raise DetectionFormatError(f"wrong type at {path}.bbox: expected 4 numbers")
        segs = []
        for j, poly in enumerate(obj["segmentation"]):
            if not isinstance(poly, list) or len(poly) < 6 or len(poly) % 2 != 0:
                raise DetectionFormatError(
                    f"polygon needs at least 3 points at {path}.segmentation[{j}]"
                )
            segs.append(tuple(poly))
        out.append(
            Detection(
                image_id=obj["image_id"],
                category_id=obj["category_id"],
                score=float(score),
                bbox=tuple(bbox),
                segmentation=tuple(segs),
            )
        )
    return DetectionSet(detections=tuple(out), source=source)


def serialize_detections(detset):
    """Interchange JSON; detections keep their order, output is deterministic."""
    doc = {
        "source": detset.source,
        "detections": [
            {
                "image_id": d.image_id,
                "category_id": d.category_id,
                "score": d.score,
                "bbox": list(d.bbox),
                "segmentation": [list(p) for p in d.segmentation],
            }
            for d in detset.detections
        ],
    }
    return json.dumps(doc, indent=2)


def iou(a, b):
    """Intersection over union of two (x, y, w, h) boxes, in continuous coordinates."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union


def filter_by_score(detset, threshold):
    """Keep detections with score >= threshold (inclusive, so 0.7 keeps 0.70)."""
    return DetectionSet(
        tuple(d for d in detset.detections if d.score >= threshold), detset.source
    )


def nms(detset, iou_threshold=0.5):
    """Greedy non-maximum suppression per (image_id, category_id) group.

    Repeatedly keeps the highest-score detection and discards remaining
    ones overlapping it with IoU > threshold. Score ties break by input
    index (earlier wins). Output is ordered by descending score, then
    input index.
    """
    groups = {}
    for idx, d in enumerate(detset.detections):
        groups.setdefault((d.image_id, d.category_id), []).append((idx, d))
    kept = []
    for group in groups.values():
        order = sorted(group, key=lambda t: (-t[1].score, t[0]))
        while order:
            idx, best = order.pop(0)
            kept.append((idx, best))
            order = [(i, d) for i, d in order if iou(best.bbox, d.bbox) <= iou_threshold]
    kept.sort(key=lambda t: (-t[1].score, t[0]))
    return DetectionSet(tuple(d for _, d in kept), detset.source)


def generate_anchors(width, height, scales=(32.0, 64.0, 128.0), ratios=(0.5, 1.0, 2.0)):
    """One anchor per (cell center, scale, ratio) on a width x height grid.

    Count is width*height*len(scales)*len(ratios) -- the familiar W*H*9
    with the default 3 scales and 3 ratios. Anchors may extend past the
    grid; they are flagged via Anchor.inside, not clipped.
    """
    for s in scales:
        if s <= 0:
            raise ValueError(f"non-positive scale {s}")
    for r in ratios:
        if r <= 0:
            raise ValueError(f"non-positive aspect ratio {r}")
    anchors = []
    for y in range(height):
        for x in range(width):
            for s in scales:
                for r in ratios:
                    anchors.append(Anchor(center=(x + 0.5, y + 0.5), scale=float(s), aspect_ratio=float(r)))
    return anchors


def detections_to_mask(detset, width, height):
    """Union mask of all detections' segmentations at the given size.

    Detections without a segmentation contribute their filled bbox, so the
    evaluator also serves box-only detectors.
    """
    mask = np.zeros((height, width), dtype=bool)
    for d in detset.detections:
        if d.segmentation:
            for poly in d.segmentation:
                pts = list(zip(poly[0::2], poly[1::2]))
                mask |= raster.rasterize_polygon(pts, width, height)
        else:
            x, y, w, h = d.bbox
            rect = [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
            mask |= raster.rasterize_polygon(rect, width, height)
    return mask
