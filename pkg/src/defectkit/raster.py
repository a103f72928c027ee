"""Raster primitives: grayscale images, binary masks, connected components,
boundary polygon extraction and polygon rasterization.

Conventions used throughout the toolkit:

- A grayscale image is a 2-D uint8 numpy array indexed ``[y, x]``.
- A binary mask is a 2-D bool array of the same shape; True marks a defect
  pixel (white in the stored ground-truth images), False is background.
- Polygon vertices are lattice points on the pixel-corner grid, ordered so
  that the shoelace signed area is positive, i.e. the loop runs with the
  interior on its left when y grows downward. A single pixel at (x, y)
  yields the unit square [(x,y), (x+1,y), (x+1,y+1), (x,y+1)].
- Rasterization fills exactly the pixels whose center (x+0.5, y+0.5) lies
  inside the polygon under the even-odd rule, which makes
  rasterize_polygon(trace_boundary(c)) an exact inverse of tracing (after
  hole filling).
"""

from __future__ import annotations

import math
from collections import deque
from itertools import chain
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

# below this pixel count plain-Python beats the scipy call overhead
_SMALL = 256


@dataclass(frozen=True)
class Component:
    """One connected blob of defect pixels."""

    id: int
    pixels: frozenset  # of (x, y)
    bbox: tuple  # (x, y, w, h), tightest enclosing box
    area: int

    def to_mask(self, width, height):
        """Render the component onto a fresh (height, width) bool array."""
        m = np.zeros((height, width), dtype=bool)
        for x, y in self.pixels:
            m[y, x] = True
        return m


def binarize(image, threshold):
    """Mask of pixels strictly brighter than ``threshold``."""
    image = np.asarray(image)
    return image > threshold


def connected_components(mask, connectivity=8):
    """Split a mask into connected blobs.

    Components are ordered by their top-left-most pixel in row-major scan
    order and get ids 1..n in that order, so annotation ids are stable.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask, dtype=bool)
    if mask.size <= _SMALL:
        groups = _label_small(mask, connectivity)
    else:
        groups = _label_scipy(mask, connectivity)
    comps = []
    for new_id, pixels in enumerate(groups, start=1):
        xs = [p[0] for p in pixels]
        ys = [p[1] for p in pixels]
        x0, y0 = min(xs), min(ys)
        comps.append(
            Component(
                id=new_id,
                pixels=frozenset(pixels),
                bbox=(x0, y0, max(xs) - x0 + 1, max(ys) - y0 + 1),
                area=len(pixels),
            )
        )
    return comps


_N4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
_N8 = _N4 + ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _label_small(mask, connectivity):
    """Flood labeling in row-major discovery order; returns lists of pixels.

    Visited cells are cleared in place, so each pixel is touched once.
    """
    h, w = mask.shape
    cells = mask.tolist()
    neigh = _N4 if connectivity == 4 else _N8
    groups = []
    for y0 in range(h):
        row = cells[y0]
        for x0 in range(w):
            if not row[x0]:
                continue
            row[x0] = False
            stack = [(x0, y0)]
            pixels = []
            while stack:
                px, py = stack.pop()
                pixels.append((px, py))
                for dx, dy in neigh:
                    nx, ny = px + dx, py + dy
                    if 0 <= nx < w and 0 <= ny < h and cells[ny][nx]:
                        cells[ny][nx] = False
                        stack.append((nx, ny))
            groups.append(pixels)
    return groups


_STRUCT4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT8 = np.ones((3, 3), dtype=bool)


def _label_scipy(mask, connectivity):
    labels, n = ndimage.label(mask, structure=_STRUCT4 if connectivity == 4 else _STRUCT8)
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)  # row-major order
    labs = labels[ys, xs]
    uniq, first_idx = np.unique(labs, return_index=True)
    sort = np.argsort(labs, kind="stable")
    bounds = np.searchsorted(labs[sort], uniq)
    bounds = np.append(bounds, len(labs))
    by_label = {}
    xs_s, ys_s = xs[sort].tolist(), ys[sort].tolist()
    for k, lab in enumerate(uniq.tolist()):
        by_label[lab] = list(zip(xs_s[bounds[k] : bounds[k + 1]], ys_s[bounds[k] : bounds[k + 1]]))
    order = uniq[np.argsort(first_idx)].tolist()  # by first row-major appearance
    return [by_label[lab] for lab in order]


def fill_holes(mask):
    """Fill interior holes (background not 4-connected to the border)."""
    mask = np.asarray(mask, dtype=bool)
    if mask.size > _SMALL:
        return ndimage.binary_fill_holes(mask)
    h, w = mask.shape
    cells = mask.tolist()
    outside = [[False] * w for _ in range(h)]
    queue = deque()
    for x in range(w):
        for y in (0, h - 1):
            if not cells[y][x] and not outside[y][x]:
                outside[y][x] = True
                queue.append((x, y))
    for y in range(h):
        for x in (0, w - 1):
            if not cells[y][x] and not outside[y][x]:
                outside[y][x] = True
                queue.append((x, y))
    while queue:
        px, py = queue.popleft()
        for dx, dy in _N4:
            nx, ny = px + dx, py + dy
            if 0 <= nx < w and 0 <= ny < h and not cells[ny][nx] and not outside[ny][nx]:
                outside[ny][nx] = True
                queue.append((nx, ny))
    filled = np.ones((h, w), dtype=bool)
    for y in range(h):
        row = outside[y]
        for x in range(w):
            if row[x]:
                filled[y, x] = False
    return filled


# Per walk direction (right, down, left, up): the step, the cell offsets on
# the exterior and interior side of the vertex ahead, and the direction
# indices for a right (toward exterior) and left turn.
_TRACE = (
    (1, 0, 0, -1, 0, 0, 3, 1),
    (0, 1, 0, 0, -1, 0, 0, 2),
    (-1, 0, -1, 0, -1, -1, 1, 3),
    (0, -1, -1, -1, 0, -1, 2, 0),
)


def _trace_filled(pixels, start=None):
    """Crack-following walk around a hole-free pixel set.

    Starts at the top-left corner of the first pixel in row-major order
    (callers that already know it can pass ``start``) and walks edges
    keeping the interior on the left (y grows downward), so the shoelace
    area comes out positive. At each vertex the two cells ahead decide the
    turn: the exterior-side cell filled means turn toward it (this crosses
    pinch corners between diagonally touching pixels, keeping the boundary
    one closed loop), the interior-side cell filled means go straight,
    otherwise turn the other way.
    """
    inside = set(pixels)
    if start is None:
        start = min(inside, key=lambda p: (p[1], p[0]))
    vertices = [start]
    append = vertices.append
    sx, sy = start
    px, py = start
    dx, dy, eox, eoy, iox, ioy, dr, dl = _TRACE[0]
    while True:
        px += dx
        py += dy
        if px == sx and py == sy:
            break
        append((px, py))
        if (px + eox, py + eoy) in inside:
            dx, dy, eox, eoy, iox, ioy, dr, dl = _TRACE[dr]
        elif (px + iox, py + ioy) not in inside:
            dx, dy, eox, eoy, iox, ioy, dr, dl = _TRACE[dl]
    return vertices


def fill_pixels(pixels, bbox):
    """Hole-fill a pixel set working only inside its bounding box.

    Background cells 4-connected to the bbox border stay background; the
    rest are holes and get filled. Returns the filled pixel list.
    """
    bx, by, bw, bh = bbox
    if bw < 3 or bh < 3:
        return list(pixels)  # no strict interior, so no holes possible
    if len(pixels) == bw * bh:
        return list(pixels)
    if bw * bh >= _SMALL:
        local = np.zeros((bh, bw), dtype=bool)
        for x, y in pixels:
            local[y - by, x - bx] = True
        filled = ndimage.binary_fill_holes(local)
        if int(filled.sum()) == len(pixels):
            return list(pixels)
        ys, xs = np.nonzero(filled)
        return list(zip((xs + bx).tolist(), (ys + by).tolist()))
    inside = set(pixels)
    outside = set()
    queue = deque()
    for x in range(bx, bx + bw):
        for y in (by, by + bh - 1):
            if (x, y) not in inside:
                outside.add((x, y))
                queue.append((x, y))
    for y in range(by + 1, by + bh - 1):
        for x in (bx, bx + bw - 1):
            if (x, y) not in inside and (x, y) not in outside:
                outside.add((x, y))
                queue.append((x, y))
    while queue:
        px, py = queue.popleft()
        for dx, dy in _N4:
            n = (px + dx, py + dy)
            if (
                bx <= n[0] < bx + bw
                and by <= n[1] < by + bh
                and n not in inside
                and n not in outside
            ):
                outside.add(n)
                queue.append(n)
    if len(inside) + len(outside) == bw * bh:
        return list(pixels)  # every background cell escapes: no holes
    return [
        (x, y)
        for y in range(by, by + bh)
        for x in range(bx, bx + bw)
        if (x, y) not in outside
    ]


# boundary templates for small hole-free components, keyed by
# (bbox_w, bbox_h, local pixel bitmask); bounded so pathological corpora
# cannot grow the cache without limit
_TEMPLATES = {}
_TEMPLATE_CELLS = 60  # largest pattern one int64 bitmask can key
_TEMPLATE_LIMIT = 1 << 16


# _TRACE with cell offsets folded into the integer pixel encoding
# y*K + x used by batch_trace: (dx, dy, dcode, ext_code, int_code, dr, dl)
def _trace_table(K):
    return tuple(
        (dx, dy, dy * K + dx, eoy * K + eox, ioy * K + iox, dr, dl)
        for dx, dy, eox, eoy, iox, ioy, dr, dl in _TRACE
    )


def _trace_codes(inside, vcode, sx, sy, table):
    """_trace_filled on an int-encoded pixel set (y*K+x); much faster for
    the batched converter because membership tests hash small ints.
    Returns the boundary as flat [x1, y1, x2, y2, ...] coordinates."""
    flat = [sx, sy]
    append = flat.append
    px, py = sx, sy
    start = vcode
    dx, dy, dc, ec, ic, dr, dl = table[0]
    while True:
        px += dx
        py += dy
        vcode += dc
        if vcode == start:
            break
        append(px)
        append(py)
        if vcode + ec in inside:
            dx, dy, dc, ec, ic, dr, dl = table[dr]
        elif vcode + ic not in inside:
            dx, dy, dc, ec, ic, dr, dl = table[dl]
    return flat


def batch_trace(masks):
    """Boundary polygons of every 8-connected component of every mask.

    Stacks all masks (separated by blank rows) so labeling and hole
    filling run as single C calls, which is much faster than per-mask
    work when converting thousands of small masks. Returns, for each
    input mask, a list of (flat_polygon, filled_area, bbox) in that
    mask's own coordinates, ordered by top-left-most pixel; the flat
    [x1, y1, ...] polygon and area describe the hole-filled component
    exactly as trace_boundary would.

    A blob whose hole encloses another blob makes the filled regions
    ambiguous in the stacked pass; those fall back to per-component
    filling.
    """
    if not masks:
        return []
    heights = [m.shape[0] for m in masks]
    width = max(m.shape[1] for m in masks)
    starts = []
    y = 0
    for h in heights:
        starts.append(y)
        y += h + 1  # blank separator row
    stacked = np.zeros((y, width), dtype=bool)
    for m, y0 in zip(masks, starts):
        stacked[y0 : y0 + m.shape[0], : m.shape[1]] = m

    orig_labels, n_orig = ndimage.label(stacked, structure=_STRUCT8)
    out = [[] for _ in masks]
    if n_orig == 0:
        return out
    filled_stack = ndimage.binary_fill_holes(stacked)
    outer_labels, _ = ndimage.label(filled_stack, structure=_STRUCT8)

    def segments(labels, active):
        """(uniq, first_idx, xs_sorted, ys_sorted, seg_starts) for a label map."""
        ys, xs = np.nonzero(active)  # row-major
        labs = labels[ys, xs]
        order = np.argsort(labs, kind="stable")
        sorted_labs = labs[order]
        seg = np.concatenate(([0], np.flatnonzero(np.diff(sorted_labs)) + 1))
        # stable sort keeps each label's pixels in row-major order, so the
        # segment head is also the label's first row-major occurrence
        return sorted_labs[seg], order[seg], xs[order], ys[order], np.append(seg, len(labs))

    o_uniq, o_first, o_xs, o_ys, o_seg = segments(orig_labels, stacked)
    f_uniq, _, f_xs, f_ys, f_seg = segments(outer_labels, filled_stack)

    # outer blob under each original component; one shared by several
    # components means nesting (a blob inside another blob's hole)
    seg0 = o_seg[:-1]
    n_pix = np.diff(o_seg)
    outer_arr = outer_labels[o_ys[seg0], o_xs[seg0]]
    single = np.bincount(outer_arr)[outer_arr] == 1

    # per-component bbox / start pixel / image index, all vectorized;
    # within a segment pixels are row-major, so the first one is both the
    # top-left-most pixel and the y minimum
    bx_a = np.minimum.reduceat(o_xs, seg0)
    bw_a = np.maximum.reduceat(o_xs, seg0) - bx_a + 1
    by_a = o_ys[seg0]
    bh_a = np.maximum.reduceat(o_ys, seg0) - by_a + 1
    start_arr = np.array(starts)
    img_a = np.searchsorted(start_arr, by_a, side="right") - 1
    by_loc = by_a - start_arr[img_a]

    # bbox-local bit pattern per component, for the boundary template
    # cache; patterns too large for one int64 never get looked up, so
    # their (overflowed) keys are harmless
    rep = np.repeat(np.arange(len(seg0)), n_pix)
    bitpos = (o_ys - by_a[rep]) * bw_a[rep] + (o_xs - bx_a[rep])
    key_a = np.add.reduceat(np.left_shift(np.int64(1), np.minimum(bitpos, 62)), seg0)

    # matching hole-filled segment and filled area per component (both
    # only meaningful where ``single``); filling never moves the bbox
    j_arr = np.searchsorted(f_uniq, outer_arr)
    fa_a = f_seg[j_arr]
    fb_a = f_seg[j_arr + 1]
    holes = fb_a - fa_a != n_pix
    area_a = np.where(holes, fb_a - fa_a, n_pix)

    # how each component gets its polygon: 0 replay/record a cached
    # boundary template, 1 walk the original pixels, 2 walk the
    # hole-filled pixels, 3 nested blobs (fill this one alone first)
    state = np.where(
        ~single, 3, np.where(holes, 2, np.where(bw_a * bh_a <= _TEMPLATE_CELLS, 0, 1))
    )

    # pixel codes y*K + x, already shifted to mask-local coordinates by
    # subtracting each pixel's image row offset. K leaves room for the
    # x = -1 and x = width cells probed during the walk.
    K = width + 3
    table = _trace_table(K)
    o_off = start_arr[np.searchsorted(start_arr, o_ys, side="right") - 1]
    o_codes = ((o_ys - o_off + 1) * K + (o_xs + 1)).tolist()
    f_off = start_arr[np.searchsorted(start_arr, f_ys, side="right") - 1]
    f_codes = ((f_ys - f_off + 1) * K + (f_xs + 1)).tolist()

    rank = np.argsort(o_first)  # components in row-major stacked order = image order
    cols = (seg0, o_seg[1:], fa_a, fb_a, img_a, bx_a, by_loc, bw_a, bh_a,
            o_xs[seg0], key_a, state, area_a)
    rows = zip(*(c[rank].tolist() for c in cols))
    templates = _TEMPLATES
    for a, b, fa, fb, img, bx, by, bw, bh, sx, key, st, area in rows:
        if st == 0:
            # hole-free small components recur constantly when converting
            # corpora of tiny masks: trace each local pattern once, and
            # additionally remember nearby placements with the offsets
            # baked in so repeats cost one dict hit
            placed = (bw, bh, key, bx, by) if bx < 16 and by < 16 else None
            verts = templates.get(placed) if placed else None
            if verts is None:
                lkey = (bw, bh, key)
                tmpl = templates.get(lkey)
                if tmpl is None:
                    base = by * K + bx
                    inside = {c - base for c in o_codes[a:b]}
                    lx = sx - bx
                    tmpl = tuple(_trace_codes(inside, K + lx + 1, lx, 0, table))
                    if len(templates) < _TEMPLATE_LIMIT:
                        templates[lkey] = tmpl
                if bx or by:
                    shifted = list(tmpl)
                    if bx:
                        shifted[0::2] = [x + bx for x in shifted[0::2]]
                    if by:
                        shifted[1::2] = [y + by for y in shifted[1::2]]
                    verts = tuple(shifted)
                else:
                    verts = tmpl
                if placed and len(templates) < _TEMPLATE_LIMIT:
                    templates[placed] = verts
            out[img].append((verts, area, (bx, by, bw, bh)))
            continue
        bbox = (bx, by, bw, bh)
        if st == 1:
            inside = set(o_codes[a:b])
        elif st == 2:
            inside = set(f_codes[fa:fb])
        else:
            # nested blobs share one filled region: fill this one alone
            y0 = starts[img]
            pixels = fill_pixels(
                list(zip(o_xs[a:b].tolist(), (o_ys[a:b] - y0).tolist())), bbox
            )
            inside = {(py + 1) * K + (px + 1) for px, py in pixels}
            area = len(pixels)
        # start at the top-left pixel; filling never adds top-row pixels
        verts = tuple(_trace_codes(inside, (by + 1) * K + (sx + 1), sx, by, table))
        out[img].append((verts, area, bbox))
    return out


def fill_component(component, width, height):
    """Hole-filled mask of a single component at the given canvas size."""
    m = np.zeros((height, width), dtype=bool)
    for x, y in fill_pixels(component.pixels, component.bbox):
        m[y, x] = True
    return m


def trace_boundary(component):
    """Outer boundary polygon of a component, interior holes filled."""
    if not component.pixels:
        raise ValueError("cannot trace an empty component")
    return _trace_filled(fill_pixels(component.pixels, component.bbox))


def polygon_signed_area(vertices):
    """Shoelace signed area; positive for the toolkit's orientation."""
    area = 0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return area / 2.0


def rasterize_polygon(vertices, width, height, out=None):
    """Fill pixels whose center lies inside the polygon (even-odd rule).

    Vertices may be floats (external annotations); toolkit-traced polygons
    have integer vertices and rasterize back to their source region
    exactly. ``out`` lets callers accumulate a union in place.
    """
    mask = out if out is not None else np.zeros((height, width), dtype=bool)
    if _rasterize_flat(list(chain.from_iterable(vertices)), width, height, mask):
        return mask
    for x, y in vertices:
        if not (0 <= x <= width and 0 <= y <= height):
            raise ValueError(f"polygon vertex ({x}, {y}) outside [0,{width}]x[0,{height}]")
    n = len(vertices)
    ys = [v[1] for v in vertices]
    y_lo = max(0, int(math.floor(min(ys))))
    y_hi = min(height, int(math.ceil(max(ys))))
    for y in range(y_lo, y_hi):
        yc = y + 0.5
        crossings = []
        for i in range(n):
            x1, y1 = vertices[i]
            x2, y2 = vertices[(i + 1) % n]
            if (y1 <= yc) == (y2 <= yc):
                continue
            crossings.append(x1 + (yc - y1) * (x2 - x1) / (y2 - y1))
        if not crossings:
            continue
        crossings.sort()
        # a center is inside when an odd number of crossings lies strictly
        # to its right (ray cast toward +x), i.e. centers in [a, b) for
        # each crossing pair -- a center exactly on the right edge is out
        for k in range(0, len(crossings) - 1, 2):
            a, b = crossings[k], crossings[k + 1]
            lo = max(0, math.ceil(a - 0.5))
            hi = min(width - 1, math.ceil(b - 0.5) - 1)
            if lo <= hi:
                mask[y, lo : hi + 1] = True
    return mask


def _rasterize_flat(flat, width, height, mask):
    """Fast even-odd fill for integer axis-aligned polygons (the kind
    trace_boundary emits), on flat [x1, y1, x2, y2, ...] coordinates:
    each vertical edge toggles row parity at its column, and sorted
    toggle columns pair up into filled runs per row.

    Returns False when the polygon has a slanted or non-integer edge so
    the caller falls back to the generic scanline (which re-checks vertex
    bounds for the float case).
    """
    toggles = []  # (x, y_top, y_bottom) per vertical edge
    y_lo, y_hi = height, 0
    x1 = flat[-2]
    y1 = flat[-1]
    for i in range(0, len(flat), 2):
        x2 = flat[i]
        y2 = flat[i + 1]
        if type(x2) is not int or type(y2) is not int:
            return False
        if x2 < 0 or x2 > width or y2 < 0 or y2 > height:
            raise ValueError(f"polygon vertex ({x2}, {y2}) outside [0,{width}]x[0,{height}]")
        if y1 != y2:
            if x1 != x2:
                return False
            if x1 < width:
                if y1 < y2:
                    a, b = y1, y2
                else:
                    a, b = y2, y1
                toggles.append((x1, a, b))
                if a < y_lo:
                    y_lo = a
                if b > y_hi:
                    y_hi = b
        x1, y1 = x2, y2
    if y_lo >= y_hi:
        return True  # degenerate: nothing to fill
    if len(toggles) <= 32:
        rows = [[] for _ in range(y_lo, y_hi)]
        for x, a, b in toggles:
            for y in range(a - y_lo, b - y_lo):
                rows[y].append(x)
        for y, xs in enumerate(rows, start=y_lo):
            if not xs:
                continue
            xs.sort()
            if len(xs) & 1:
                xs.append(width)  # closing edge at x == width was dropped
            row = mask[y]
            for k in range(0, len(xs), 2):
                row[xs[k] : xs[k + 1]] = True
        return True
    block = np.zeros((y_hi - y_lo, width), dtype=bool)
    for x, a, b in toggles:
        block[a - y_lo : b - y_lo, x] ^= True
    np.logical_xor.accumulate(block, axis=1, out=block)
    mask[y_lo:y_hi] |= block
    return True


def mask_area_bbox(mask_or_component):
    """(area, bbox) of the true region; bbox is COCO-style [x, y, w, h].

    Raises on an all-false mask because the bbox is undefined there.
    """
    if isinstance(mask_or_component, Component):
        return mask_or_component.area, mask_or_component.bbox
    mask = np.asarray(mask_or_component, dtype=bool)
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        raise ValueError("bbox undefined for an empty mask")
    x0, y0 = int(xs.min()), int(ys.min())
    return len(xs), (x0, y0, int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1)
