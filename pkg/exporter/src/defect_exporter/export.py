"""Run a model over an image directory and write interchange JSON.

The exporter applies no score threshold or NMS beyond the optional
score_floor: the evaluator thresholds at its own 0.7 default, and keeping
raw scores lets metric sweeps re-threshold without re-running the model.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .trace import mask_to_instances

IMAGE_EXTS = (".png", ".pgm")


@dataclass(frozen=True)
class ExportJob:
    model_artifact: str
    images: str  # directory
    coco_ref: str | None = None  # COCO file for image-id mapping
    score_floor: float = 0.0  # export everything by default

    def __post_init__(self):
        if not 0.0 <= self.score_floor <= 1.0:
            raise ValueError("score_floor must be in [0, 1]")


class Model:
    """Backend interface: predict(image) -> list of (score, bool mask)."""

    def predict(self, name, image):
        raise NotImplementedError


class StubModel(Model):
    """Canned predictions keyed by file name, for contract tests."""

    def __init__(self, canned=None):
        self.canned = canned or {}

    def predict(self, name, image):
        return self.canned.get(name, [])


def load_model(artifact):
    """Resolve a model artifact; only the stub backend ships here.

    Real backends register by subclassing Model and loading their own
    weights; "stub" (optionally "stub:<json>" with {"name": [[score,
    mask-rows], ...]}) exists so the pipeline is testable without any.
    """
    if artifact == "stub":
        return StubModel()
    if artifact.startswith("stub:"):
        with open(artifact[5:]) as f:
            doc = json.load(f)
        canned = {
            name: [(score, np.array(rows, dtype=bool)) for score, rows in preds]
            for name, preds in doc.items()
        }
        return StubModel(canned)
    raise ValueError(f"cannot load model artifact {artifact!r} (no backend)")


def _list_images(directory):
    names = sorted(n for n in os.listdir(directory) if n.lower().endswith(IMAGE_EXTS))
    if not names:
        raise ValueError(f"no images (*.png, *.pgm) found in {directory}")
    return names


def _image_ids(names, coco_ref):
    """file_name -> id from the COCO reference, else lexicographic from 1."""
    if coco_ref is None:
        return {n: i for i, n in enumerate(names, start=1)}
    with open(coco_ref) as f:
        doc = json.load(f)
    by_name = {im["file_name"]: im["id"] for im in doc["images"]}
    missing = [n for n in names if n not in by_name]
    if missing:
        raise ValueError(f"images not present in {coco_ref}: {', '.join(missing)}")
    return {n: by_name[n] for n in names}


def export(job, model=None, out_path=None):
    """Export one detection per predicted instance; returns the JSON text.

    Segmentation polygons come from the shared boundary-tracing
    convention, so the evaluator's rasterization reproduces each predicted
    mask (hole-filled) exactly.
    """
    if model is None:
        model = load_model(job.model_artifact)
    names = _list_images(job.images)
    ids = _image_ids(names, job.coco_ref)
    detections = []
    for name in names:
        with Image.open(os.path.join(job.images, name)) as im:
            image = np.asarray(im.convert("L"), dtype=np.uint8)
        for score, mask in model.predict(name, image):
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != image.shape:
                raise ValueError(
                    f"predicted mask shape {mask.shape} does not match image {name} {image.shape}"
                )
            if score < job.score_floor or not mask.any():
                continue
            for _, area, bbox, polygon in mask_to_instances(mask):
                detections.append(
                    {
                        "image_id": ids[name],
                        "category_id": 1,
                        "score": float(score),
                        "bbox": list(bbox),
                        "segmentation": [[c for xy in polygon for c in xy]],
                    }
                )
    text = json.dumps({"source": job.model_artifact, "detections": detections}, indent=2)
    if out_path is not None:
        with open(out_path, "w") as f:
            f.write(text)
    return text
