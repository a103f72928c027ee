"""Instance mask to boundary polygons, using the toolkit's tracing
convention: counter-clockwise (in image coordinates, y down) crack
boundaries on the pixel-corner lattice, holes filled, one polygon per
8-connected component ordered by top-left-most pixel.

Matching the convention matters: the evaluator rasterizes these polygons
with pixel-center even-odd filling, and under this convention that
reproduces the (hole-filled) instance mask exactly.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

_STRUCT8 = np.ones((3, 3), dtype=bool)

# For each walk direction (right, down, left, up): the vertex step, the
# cells just ahead on the exterior and interior side, and the direction
# after a right or left turn.
_STEPS = {
    "R": ((1, 0), (0, -1), (0, 0), "U", "D"),
    "D": ((0, 1), (0, 0), (-1, 0), "R", "L"),
    "L": ((-1, 0), (-1, 0), (-1, -1), "D", "U"),
    "U": ((0, -1), (-1, -1), (0, -1), "L", "R"),
}


def _trace_one(inside, start):
    """Walk the crack boundary of a hole-free pixel set, interior on the
    left, starting at the top-left corner of the top-left-most pixel."""
    x, y = start
    verts = [(x, y)]
    direction = "R"
    while True:
        (dx, dy), ext, intr, right, left = _STEPS[direction]
        x += dx
        y += dy
        if (x, y) == start:
            return verts
        verts.append((x, y))
        if (x + ext[0], y + ext[1]) in inside:
            direction = right  # pinch corner: cross toward the exterior cell
        elif (x + intr[0], y + intr[1]) not in inside:
            direction = left


def mask_to_instances(mask):
    """[(pixel_set, area, bbox, polygon)] per 8-connected component.

    Components come back ordered by top-left-most pixel; the polygon and
    area describe the hole-filled component, the bbox is COCO [x, y, w, h].
    """
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_STRUCT8)
    instances = []
    order = []
    for lab in range(1, n + 1):
        component = labels == lab
        filled = ndimage.binary_fill_holes(component)
        ys, xs = np.nonzero(filled)
        x0, y0 = int(xs.min()), int(ys.min())
        bbox = (x0, y0, int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1)
        inside = set(zip(xs.tolist(), ys.tolist()))
        cy, cx = np.nonzero(component)
        start = (int(cx[cy == cy.min()].min()), int(cy.min()))
        polygon = _trace_one(inside, start)
        instances.append((inside, len(inside), bbox, polygon))
        order.append((start[1], start[0]))
    return [inst for _, inst in sorted(zip(order, instances), key=lambda t: t[0])]
