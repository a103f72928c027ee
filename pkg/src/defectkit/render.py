"""Overlay rendering: segmentation fill, bounding box, label and confidence.

The output mirrors what the inspection report shows per detection: the
segmentation area alpha-blended over the radiograph, a one-pixel bounding
box, and a "<category> <NN>%" label. Everything is drawn with integer
arithmetic and the built-in bitmap font, so output bytes are identical
across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import font5x7
from .detections import detections_to_mask, DetectionSet


@dataclass(frozen=True)
class OverlayStyle:
    fill_opacity: float = 0.4
    box_color: tuple = (255, 64, 64)
    fill_color: tuple = (255, 64, 64)
    text_color: tuple = (255, 255, 0)

    def __post_init__(self):
        if not 0.0 <= self.fill_opacity <= 1.0:
            raise ValueError("fill_opacity must be in [0, 1]")


def _round_half_up(x):
    import math

    return math.floor(x + 0.5)


def _draw_text(canvas, text, x0, y0, color):
    h, w, _ = canvas.shape
    cx = x0
    for ch in text:
        for dy, row in enumerate(font5x7.glyph(ch)):
            for dx, on in enumerate(row):
                if on:
                    px, py = cx + dx, y0 + dy
                    if 0 <= px < w and 0 <= py < h:
                        canvas[py, px] = color
        cx += font5x7.WIDTH + font5x7.SPACING


def _draw_box(canvas, bbox, color):
    h, w, _ = canvas.shape
    x, y, bw, bh = (int(round(v)) for v in bbox)
    x1, y1 = x + bw, y + bh
    if x < 0 or y < 0 or x1 > w or y1 > h:
        raise ValueError(f"bbox {bbox} outside {w}x{h} image")
    canvas[y, x:x1] = color
    canvas[min(y1, h) - 1, x:x1] = color
    canvas[y:y1, x] = color
    canvas[y:y1, min(x1, w) - 1] = color


def overlay(image, detset, category_names=None, style=OverlayStyle()):
    """Render detections over a grayscale image; returns an (h, w, 3) uint8 array.

    The confidence is shown as an integer percentage, rounded half-up.
    Labels sit just above the bbox and drop below it when the box touches
    the top edge.
    """
    image = np.asarray(image, dtype=np.uint8)
    h, w = image.shape
    canvas = np.repeat(image[:, :, None], 3, axis=2).astype(np.float64)
    category_names = category_names or {}

    for d in detset.detections:
        fill = detections_to_mask(DetectionSet((d,)), w, h)
        a = style.fill_opacity
        color = np.array(style.fill_color, dtype=np.float64)
        canvas[fill] = (1 - a) * canvas[fill] + a * color
    canvas = np.round(canvas).astype(np.uint8)

    for d in detset.detections:
        _draw_box(canvas, d.bbox, style.box_color)
        name = category_names.get(d.category_id, f"cat{d.category_id}")
        label = f"{name} {_round_half_up(d.score * 100)}%"
        tw, th = font5x7.text_size(label)
        x = int(round(d.bbox[0]))
        y = int(round(d.bbox[1])) - th - 1
        if y < 0:
            y = int(round(d.bbox[1] + d.bbox[3])) + 1  # below when box touches the top
        x = max(0, min(x, w - tw))
        _draw_text(canvas, label, x, y, style.text_color)
    return canvas
