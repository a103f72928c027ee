"""Classical automatic-threshold defect detector.

This is the built-in model stand-in: Otsu threshold, connected components,
small-blob rejection, and a contrast-based confidence score, emitting the
same DetectionSet the deep-learning exporters produce. It lets the whole
convert/eval/overlay pipeline run end to end with no learned weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import raster
from .detections import Detection, DetectionSet


@dataclass(frozen=True)
class BaselineParams:
    min_area: int = 3
    connectivity: int = 8
    invert: bool = False  # set for images where defects are darker than background

    def __post_init__(self):
        if self.min_area < 1:
            raise ValueError("min_area must be >= 1")


def otsu_threshold(histogram):
    """Threshold maximizing between-class variance w0*w1*(mu0-mu1)^2.

    Classes split as background <= t < foreground; ties take the smallest t.
    A single-occupied-bin histogram has zero variance everywhere and
    returns t = 0.
    """
    hist = np.asarray(histogram, dtype=np.float64)
    if hist.shape != (256,):
        raise ValueError("histogram must have 256 bins")
    total = hist.sum()
    if total == 0:
        raise ValueError("empty histogram")
    levels = np.arange(256)
    w0 = np.cumsum(hist)  # mass at <= t
    m0 = np.cumsum(hist * levels)  # intensity mass at <= t
    w1 = total - w0
    m1 = m0[-1] - m0
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = np.where(w0 > 0, m0 / w0, 0.0)
        mu1 = np.where(w1 > 0, m1 / w1, 0.0)
    variance = np.where((w0 > 0) & (w1 > 0), w0 * w1 * (mu0 - mu1) ** 2, 0.0)
    return int(np.argmax(variance))  # argmax returns the first (smallest) maximizer


def detect_defects(image, params=BaselineParams()):
    """Threshold-and-label detector returning a DetectionSet (image_id 0).

    Score is the normalized contrast of the blob against the threshold:
    (mean - t) / (255 - t) for bright defects, (t - mean) / t when
    inverted, clamped to [0, 1]. This is a toolkit convention so the
    downstream score filter and NMS have something to act on.
    """
    image = np.asarray(image)
    height, width = image.shape
    hist = np.bincount(image.ravel(), minlength=256)[:256]
    if params.invert:
        # threshold the reflected image so the dark class is the foreground
        t = 255 - otsu_threshold(hist[::-1])
        mask = image < t
    else:
        t = otsu_threshold(hist)
        mask = image > t
    detections = []
    for comp in raster.connected_components(mask, params.connectivity):
        if comp.area < params.min_area:
            continue
        mean = float(np.mean([image[y, x] for x, y in comp.pixels]))
        if params.invert:
            score = (t - mean) / t if t > 0 else 0.0
        else:
            score = (mean - t) / (255 - t) if t < 255 else 0.0
        score = min(1.0, max(0.0, score))
        poly = raster.trace_boundary(comp)
        detections.append(
            Detection(
                image_id=0,
                category_id=1,
                score=score,
                bbox=comp.bbox,
                segmentation=(tuple(c for p in poly for c in p),),
            )
        )
    return DetectionSet(tuple(detections), source="baseline-otsu")
