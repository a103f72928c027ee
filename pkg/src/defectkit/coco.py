"""COCO dataset model: parse/serialize/validate, mask conversion both ways,
and the seeded train/test split.

Only the detection-style subset of COCO is modelled (images, categories,
annotations with polygon segmentation). RLE segmentation and the info /
licenses blocks are out of scope; unknown keys in parsed files are ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import chain

import numpy as np

from . import raster


class CocoFormatError(ValueError):
    """Raised when a COCO document cannot be parsed; message names the path."""


@dataclass(frozen=True)
class CocoImage:
    id: int
    file_name: str
    width: int
    height: int


@dataclass(frozen=True)
class CocoCategory:
    id: int
    name: str
    supercategory: str = ""


@dataclass(frozen=True)
class CocoAnnotation:
    id: int
    image_id: int
    category_id: int
    iscrowd: int
    segmentation: tuple  # of flat coordinate tuples [x1,y1,x2,y2,...]
    area: float
    bbox: tuple  # (x, y, w, h)


@dataclass(frozen=True)
class CocoDataset:
    images: tuple = ()
    categories: tuple = ()
    annotations: tuple = ()

    def image_by_id(self, image_id):
        for im in self.images:
            if im.id == image_id:
                return im
        raise KeyError(f"no image with id {image_id}")

    def annotations_for(self, image_id):
        return [a for a in self.annotations if a.image_id == image_id]


def masks_to_coco(entries, category_name="defect"):
    """Build a dataset from (file_name, (width, height), mask) entries.

    One annotation per 8-connected blob; segmentation polygons come from
    boundary tracing, so holes inside a blob are filled (polygon
    segmentation cannot represent holes) and the recorded area is the
    hole-filled pixel count.
    """
    images = []
    masks = []
    for img_id, (file_name, size, mask) in enumerate(entries, start=1):
        width, height = size
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (height, width):
            raise ValueError(
                f"mask shape {mask.shape[::-1]} does not match image size "
                f"({width}, {height}) for {file_name!r}"
            )
        images.append(_new(CocoImage, id=img_id, file_name=file_name, width=width, height=height))
        masks.append(mask)

    annotations = []
    ann_id = 1
    for img_id, comps in enumerate(raster.batch_trace(masks), start=1):
        for flat, area, bbox in comps:
            annotations.append(
                _new(
                    CocoAnnotation,
                    id=ann_id,
                    image_id=img_id,
                    category_id=1,
                    iscrowd=0,
                    segmentation=(tuple(flat),),
                    # filling holes never widens the bbox, only the area
                    area=area,
                    bbox=bbox,
                )
            )
            ann_id += 1
    categories = (CocoCategory(id=1, name=category_name, supercategory=""),)
    return CocoDataset(images=tuple(images), categories=categories, annotations=tuple(annotations))


def _new(cls, **fields):
    """Frozen-dataclass instance without the per-field object.__setattr__
    dance in the generated __init__; converting or parsing a large corpus
    builds hundreds of thousands of these, and the plain __dict__ swap is
    more than twice as fast. Field validation stays with the callers."""
    obj = object.__new__(cls)
    object.__setattr__(obj, "__dict__", fields)
    return obj


def _req(obj, key, path, types):
    if key not in obj:
        raise CocoFormatError(f"missing required key {path}.{key}")
    val = obj[key]
    if not isinstance(val, types) or isinstance(val, bool):
        raise CocoFormatError(f"wrong type at {path}.{key}: expected {types}, got {type(val).__name__}")
    return val


def _parse_float(text):
    """json.loads hook: normalize integral decimals (e.g. "4.0") to int
    while they are decoded, so every number in the document is already in
    canonical form."""
    f = float(text)
    if f.is_integer():
        return int(f)
    return f


_NUM_TYPES = frozenset((int, float))

# decimal forms of the coordinate values a typical image can hold, so the
# serializer's hot path can index instead of calling str()
_STR = [str(i) for i in range(4096)]


def _bulk_images(raw):
    """Optimistic one-pass image parsing with column-wise type checks (a
    set over a type map is one C-level pass); returns None on any problem
    so the per-item loop can point at the offending entry."""
    try:
        rows = [(o["id"], o["file_name"], o["width"], o["height"]) for o in raw]
    except (KeyError, TypeError):
        return None
    if not rows:
        return ()
    ids, names, widths, heights = zip(*rows)
    if not (
        set(map(type, ids)) == {int}
        and set(map(type, names)) == {str}
        and set(map(type, widths)) == {int}
        and set(map(type, heights)) == {int}
    ):
        return None
    return tuple(
        [_new(CocoImage, id=i, file_name=n, width=w, height=h) for i, n, w, h in rows]
    )


def _bulk_annotations(raw):
    """Optimistic one-pass annotation parsing, column-checked like
    _bulk_images; None sends the caller to the precise per-item loop."""
    try:
        rows = [
            (o["id"], o["image_id"], o["category_id"], o["iscrowd"],
             o["area"], o["bbox"], o["segmentation"])
            for o in raw
        ]
    except (KeyError, TypeError):
        return None
    if not rows:
        return ()
    ids, image_ids, cat_ids, iscrowds, areas, bboxes, segs = zip(*rows)
    if not (
        set(map(type, ids)) == {int}
        and set(map(type, image_ids)) == {int}
        and set(map(type, cat_ids)) == {int}
        and set(map(type, iscrowds)) == {int}
        and set(map(type, areas)) <= _NUM_TYPES
        and set(map(type, bboxes)) == {list}
        and set(map(len, bboxes)) == {4}
        and set(map(type, chain.from_iterable(bboxes))) <= _NUM_TYPES
        and set(map(type, segs)) == {list}
    ):
        return None
    polys = list(chain.from_iterable(segs))
    if polys:
        if set(map(type, polys)) != {list}:
            return None
        lens = list(map(len, polys))
        if min(lens) < 6 or any(n & 1 for n in lens):
            return None
        if not set(map(type, chain.from_iterable(polys))) <= _NUM_TYPES:
            return None
    return tuple(
        [
            _new(
                CocoAnnotation,
                id=aid,
                image_id=image_id,
                category_id=category_id,
                iscrowd=iscrowd,
                segmentation=tuple(map(tuple, seg)),
                area=area,
                bbox=tuple(bbox),
            )
            for aid, image_id, category_id, iscrowd, area, bbox, seg in rows
        ]
    )


def parse_coco(text):
    """Parse a COCO JSON document into a CocoDataset.

    Integral JSON numbers are normalized to int wherever they appear
    (external files emit e.g. "4.0" for coordinates). Errors name the
    offending path, e.g. ``annotations[3].bbox``.
    """
    try:
        doc = json.loads(text, parse_float=_parse_float)
    except json.JSONDecodeError as e:
        raise CocoFormatError(f"malformed JSON: {e}") from e
    if not isinstance(doc, dict):
        raise CocoFormatError("top level must be a JSON object")
    for key in ("images", "categories", "annotations"):
        if key not in doc:
            raise CocoFormatError(f"missing required key {key}")
        if not isinstance(doc[key], list):
            raise CocoFormatError(f"wrong type at {key}: expected array")

    images = _bulk_images(doc["images"])
    if images is None:
        images = _parse_images(doc["images"])
    categories = []
    for i, obj in enumerate(doc["categories"]):
        if type(obj) is not dict:
            raise CocoFormatError(f"wrong type at categories[{i}]: expected object")
        path = f"categories[{i}]"
        categories.append(
            CocoCategory(
                id=_req(obj, "id", path, int),
                name=_req(obj, "name", path, str),
                supercategory=str(obj.get("supercategory", "")),
            )
        )
    annotations = _bulk_annotations(doc["annotations"])
    if annotations is None:
        annotations = _parse_annotations(doc["annotations"])
    return CocoDataset(tuple(images), tuple(categories), tuple(annotations))


def _parse_images(raw):
    """Per-item image parsing; slower than _bulk_images but the error
    message names the offending entry and field."""
    images = []
    for i, obj in enumerate(raw):
        if type(obj) is not dict:
            raise CocoFormatError(f"wrong type at images[{i}]: expected object")
        path = f"images[{i}]"
        images.append(
            CocoImage(
                id=_req(obj, "id", path, int),
                file_name=_req(obj, "file_name", path, str),
                width=_req(obj, "width", path, int),
                height=_req(obj, "height", path, int),
            )
        )
    return images


def _parse_annotations(raw):
    """Per-item annotation parsing; the precise-error fallback of
    _bulk_annotations."""
    annotations = []
    for i, obj in enumerate(raw):
        if type(obj) is not dict:
            raise CocoFormatError(f"wrong type at annotations[{i}]: expected object")
        seg = obj.get("segmentation")
        if type(seg) is not list:
            path = f"annotations[{i}]"
            seg = _req(obj, "segmentation", path, (list, dict))
            if isinstance(seg, dict):
                raise CocoFormatError(f"unsupported: RLE segmentation at {path}.segmentation")
        polys = []
        for j, poly in enumerate(seg):
            if (
                type(poly) is list
                and len(poly) >= 6
                and len(poly) % 2 == 0
                and set(map(type, poly)) <= _NUM_TYPES
            ):
                polys.append(tuple(poly))
                continue
            if not isinstance(poly, list):
                raise CocoFormatError(
                    f"wrong type at annotations[{i}].segmentation[{j}]: expected number array"
                )
            if len(poly) < 6 or len(poly) % 2 != 0:
                raise CocoFormatError(
                    f"polygon has fewer than 3 points (or odd length) "
                    f"at annotations[{i}].segmentation[{j}]"
                )
            raise CocoFormatError(
                f"wrong type at annotations[{i}].segmentation[{j}]: expected number array"
            )
        bbox = obj.get("bbox")
        if (
            type(bbox) is list
            and len(bbox) == 4
            and set(map(type, bbox)) <= _NUM_TYPES
        ):
            bb = tuple(bbox)
        else:
            path = f"annotations[{i}]"
            _req(obj, "bbox", path, list)
            raise CocoFormatError(f"wrong type at {path}.bbox: expected 4 numbers")
        path = f"annotations[{i}]"
        area = _req(obj, "area", path, (int, float))
        annotations.append(
            CocoAnnotation(
                id=_req(obj, "id", path, int),
                image_id=_req(obj, "image_id", path, int),
                category_id=_req(obj, "category_id", path, int),
                iscrowd=_req(obj, "iscrowd", path, int),
                segmentation=tuple(polys),
                area=area,
                bbox=bb,
            )
        )
    return annotations


def serialize_coco(dataset):
    """Serialize to the COCO JSON layout; deterministic byte-identical output.

    Arrays are ordered by id and keys are emitted in a fixed order. The
    document is written record by record: all-int records (everything the
    converter produces) take a formatted fast path, anything else goes
    through json.dumps, so the bytes always match what json.dumps with
    (",", ":") separators would emit for the whole document.
    """
    problems = validate(dataset)
    if problems:
        raise ValueError("invalid dataset: " + "; ".join(problems[:3]))
    dumps = json.dumps
    seps = (",", ":")
    images = []
    for im in sorted(dataset.images, key=lambda im: im.id):
        if type(im.id) is int and type(im.width) is int and type(im.height) is int:
            images.append(
                '{"id":%d,"file_name":%s,"width":%d,"height":%d}'
                % (im.id, dumps(im.file_name), im.width, im.height)
            )
        else:
            images.append(dumps(
                {"id": im.id, "file_name": im.file_name, "width": im.width, "height": im.height},
                separators=seps,
            ))
    categories = [
        dumps({"id": c.id, "name": c.name, "supercategory": c.supercategory}, separators=seps)
        for c in sorted(dataset.categories, key=lambda c: c.id)
    ]
    ordered = sorted(dataset.annotations, key=lambda a: a.id)
    # one column-wise pass decides whether every annotation is all-int
    # (converter output always is); per-record checks are too slow
    polys = [p for a in ordered for p in a.segmentation]
    coords = list(chain.from_iterable(polys))
    all_int = (
        not ordered
        or (
            set(map(type, [a.id for a in ordered])) == {int}
            and set(map(type, [a.image_id for a in ordered])) == {int}
            and set(map(type, [a.category_id for a in ordered])) == {int}
            and set(map(type, [a.iscrowd for a in ordered])) == {int}
            and set(map(type, [a.area for a in ordered])) == {int}
            and set(map(len, [a.bbox for a in ordered])) == {4}
            and set(map(type, chain.from_iterable(a.bbox for a in ordered))) == {int}
            and (not coords or set(map(type, coords)) == {int})
        )
    )
    if all_int and (not coords or 0 <= min(coords) and max(coords) < len(_STR)):
        istr = _STR.__getitem__  # reuse interned digits instead of str()
        annotations = [
            '{"id":%d,"image_id":%d,"category_id":%d,"iscrowd":%d,'
            '"segmentation":[%s],"area":%d,"bbox":[%d,%d,%d,%d]}'
            % (
                (
                    a.id,
                    a.image_id,
                    a.category_id,
                    a.iscrowd,
                    ",".join("[" + ",".join(map(istr, p)) + "]" for p in a.segmentation),
                    a.area,
                )
                + tuple(a.bbox)
            )
            for a in ordered
        ]
    else:
        annotations = [
            dumps(
                {
                    "id": a.id,
                    "image_id": a.image_id,
                    "category_id": a.category_id,
                    "iscrowd": a.iscrowd,
                    "segmentation": a.segmentation,  # json encodes tuples as arrays
                    "area": a.area,
                    "bbox": a.bbox,
                },
                separators=seps,
            )
            for a in ordered
        ]
    return (
        '{"images":[' + ",".join(images)
        + '],"categories":[' + ",".join(categories)
        + '],"annotations":[' + ",".join(annotations) + "]}"
    )


def validate(dataset):
    """Structural validation; returns a list of violation messages."""
    problems = []
    image_ids = [im.id for im in dataset.images]
    if len(set(image_ids)) != len(image_ids):
        problems.append("images: duplicate image id")
    cat_ids = [c.id for c in dataset.categories]
    if len(set(cat_ids)) != len(cat_ids):
        problems.append("categories: duplicate category id")
    ann_ids = [a.id for a in dataset.annotations]
    if len(set(ann_ids)) != len(ann_ids):
        problems.append("annotations: duplicate annotation id")
    images = {im.id: im for im in dataset.images}
    cat_id_set = set(cat_ids)
    for im in dataset.images:
        if im.width < 1 or im.height < 1:
            problems.append(f"images[id={im.id}]: non-positive dimensions")
    get_im = images.get
    for i, a in enumerate(dataset.annotations):
        # one short-circuit pass for the overwhelmingly common clean
        # annotation; anything off re-runs the spelled-out checks below
        image_id = a.image_id
        im = get_im(image_id)
        x, y, w, h = a.bbox
        segs = a.segmentation
        if (
            im is not None
            and a.category_id in cat_id_set
            and (a.iscrowd == 0 or a.iscrowd == 1)
            and w > 0
            and h > 0
            and x >= 0
            and y >= 0
            and x + w <= im.width
            and y + h <= im.height
            and a.area > 0
            and (
                (len(segs) == 1 and len(segs[0]) >= 6 and len(segs[0]) % 2 == 0)
                or all(len(p) >= 6 and len(p) % 2 == 0 for p in segs)
            )
        ):
            continue
        if im is None:
            problems.append(f"annotations[{i}].image_id: unresolved image id {image_id}")
        if a.category_id not in cat_id_set:
            problems.append(
                f"annotations[{i}].category_id: unresolved category id {a.category_id}"
            )
        if a.iscrowd not in (0, 1):
            problems.append(f"annotations[{i}].iscrowd: must be 0 or 1")
        for j, poly in enumerate(segs):
            if len(poly) < 6 or len(poly) % 2 != 0:
                problems.append(
                    f"annotations[{i}].segmentation[{j}]: polygon has fewer than 3 points"
                )
        if w <= 0 or h <= 0:
            problems.append(f"annotations[{i}].bbox: non-positive width/height")
        elif im is not None and (x < 0 or y < 0 or x + w > im.width or y + h > im.height):
            problems.append(f"annotations[{i}].bbox: extends outside image {image_id}")
        if not a.area > 0:
            problems.append(f"annotations[{i}].area: must be positive")
    return problems


def coco_to_masks(dataset):
    """Reconstruct per-image masks: union of all rasterized annotation polygons."""
    problems = validate(dataset)
    if problems:
        raise ValueError("invalid dataset: " + "; ".join(problems[:3]))
    masks = _batch_rasterize(dataset.images, dataset.annotations)
    if masks is not None:
        return masks
    by_image = {}
    for a in dataset.annotations:
        by_image.setdefault(a.image_id, []).append(a)
    masks = {}
    rasterize_flat = raster._rasterize_flat
    for im in dataset.images:
        w, h = im.width, im.height
        mask = np.zeros((h, w), dtype=bool)
        for a in by_image.get(im.id, ()):
            for poly in a.segmentation:
                if not rasterize_flat(poly, w, h, mask):
                    # float or slanted polygon: generic scanline
                    raster.rasterize_polygon(list(zip(poly[0::2], poly[1::2])), w, h, out=mask)
        masks[im.id] = mask
    return masks


# beyond this many grid cells the batched parity buffers cost more memory
# than the per-image loop is worth
_BATCH_CELLS = 5_000_000


def _batch_rasterize(images, annotations):
    """Rasterize every annotation polygon of every image in one pass.

    All polygons with integer axis-aligned edges (the kind the converter
    emits) share a single parity grid: each vertical edge increments a
    counter on the rows it spans, odd counts toggle the even-odd state,
    and one XOR scan along x fills all interiors at once. Parity only
    equals the union when an image's polygon interiors are disjoint, so
    each image's parity pixel count is checked against its summed
    shoelace areas; mismatching images (e.g. a blob nested in another's
    hole) and images with non-grid-aligned polygons are rasterized one
    polygon at a time instead. Returns None when the grid would be too
    large, letting the caller run the plain per-image loop.
    """
    total_rows = sum(im.height for im in images)
    grid_w = max((im.width for im in images), default=0)
    if total_rows * grid_w > _BATCH_CELLS:
        return None
    k_of_image = {im.id: k for k, im in enumerate(images)}
    ks = [k_of_image[a.image_id] for a in annotations]
    segs = [a.segmentation for a in annotations]
    polys = [p for s in segs for p in s]  # flat coordinate tuples
    if len(polys) == len(segs):  # one polygon per annotation, the common case
        poly_image = ks  # index into `images` per polygon
    else:
        poly_image = [k for k, s in zip(ks, segs) for _ in s]
    masks = {}
    if not polys:
        for im in images:
            masks[im.id] = np.zeros((im.height, im.width), dtype=bool)
        return masks

    nv = np.fromiter(map(len, polys), dtype=np.int64, count=len(polys)) // 2
    total = int(nv.sum())
    try:
        coords = np.fromiter(chain.from_iterable(polys), dtype=np.float64, count=2 * total)
    except (TypeError, ValueError):
        return None  # non-numeric coordinate; let the scalar path report it
    xs, ys = coords[0::2], coords[1::2]
    p_start = np.concatenate(([0], np.cumsum(nv)))[:-1]
    p_img = np.array(poly_image)
    vimg = np.repeat(p_img, nv)  # image index per vertex

    # bounds errors exactly as rasterize_polygon would raise them
    w_arr = np.array([im.width for im in images])
    h_arr = np.array([im.height for im in images])
    wv = w_arr[vimg]
    hv = h_arr[vimg]
    oob = (xs < 0) | (xs > wv) | (ys < 0) | (ys > hv)
    if oob.any():
        v = int(np.argmax(oob))
        p = int(np.searchsorted(p_start, v, side="right")) - 1
        flat = polys[p]
        j = (v - int(p_start[p])) * 2
        raise ValueError(
            f"polygon vertex ({flat[j]}, {flat[j + 1]}) "
            f"outside [0,{int(wv[v])}]x[0,{int(hv[v])}]"
        )

    # next vertex around each ring
    nxt = np.arange(1, total + 1)
    nxt[p_start + nv - 1] = p_start
    dx = xs[nxt] - xs
    dy = ys[nxt] - ys
    edge_ok = ((dx == 0) | (dy == 0)) & (xs == np.floor(xs)) & (ys == np.floor(ys))
    poly_ok = np.add.reduceat((~edge_ok).astype(np.int64), p_start) == 0

    # an image enters the shared parity pass when all its polygons are
    # grid-aligned; whether parity actually equals the union is settled
    # after the pass by comparing pixel counts (see below)
    img_ok_arr = (
        np.bincount(p_img, weights=~poly_ok, minlength=len(images)) == 0
    )

    # expected pixel count per image: for a simple grid-aligned polygon
    # the even-odd raster count equals the unsigned shoelace area, so any
    # interior overlap between an image's polygons (parity cancels there,
    # while the documented semantics are the union) and any
    # self-intersecting polygon shows up as a count mismatch
    poly_area = np.abs(np.add.reduceat(xs * ys[nxt] - xs[nxt] * ys, p_start)) * 0.5
    expected = np.bincount(p_img, weights=np.where(poly_ok, poly_area, 0.0),
                           minlength=len(images))

    # toggles at x == grid_w only flip parity beyond every image's width,
    # so they are dropped along with edges of non-batched images
    row_off = np.concatenate(([0], np.cumsum(h_arr)))[:-1]
    vert = (dx == 0) & (dy != 0) & (xs < grid_w) & img_ok_arr[vimg]
    if vert.any():
        ex = xs[vert].astype(np.int64)
        ey0 = np.minimum(ys, ys[nxt])[vert].astype(np.int64)
        lens = np.abs(dy[vert]).astype(np.int64)
        base = np.repeat(row_off[vimg[vert]] + ey0, lens)
        csum = np.cumsum(lens)
        incr = np.arange(int(csum[-1])) - np.repeat(csum - lens, lens)
        lin = (base + incr) * grid_w + np.repeat(ex, lens)
        cnt = np.bincount(lin, minlength=total_rows * grid_w)
        parity = (cnt & 1).astype(bool).reshape(total_rows, grid_w)
        np.logical_xor.accumulate(parity, axis=1, out=parity)
    else:
        parity = np.zeros((total_rows, grid_w), dtype=bool)

    img_counts = np.add.reduceat(parity.sum(axis=1), row_off)
    ok_final = (img_ok_arr & (img_counts == expected)).tolist()
    if (h_arr == h_arr[0]).all() and (w_arr == grid_w).all():
        # uniform image size: slice the parity grid into per-image views
        blocks = parity.reshape(len(images), int(h_arr[0]), grid_w)
        for k, im in enumerate(images):
            masks[im.id] = blocks[k]
    else:
        off_l = row_off.tolist()
        for k, im in enumerate(images):
            off = off_l[k]
            masks[im.id] = parity[off : off + im.height, : im.width].copy()

    if all(ok_final):
        return masks
    img_polys = {}  # image index -> polygons, for the non-batched images only
    for p, k in zip(polys, poly_image):
        if not ok_final[k]:
            img_polys.setdefault(k, []).append(p)
    rasterize_flat = raster._rasterize_flat
    for k, plist in img_polys.items():
        im = images[k]
        mask = np.zeros((im.height, im.width), dtype=bool)
        for poly in plist:
            if not rasterize_flat(poly, im.width, im.height, mask):
                raster.rasterize_polygon(
                    list(zip(poly[0::2], poly[1::2])), im.width, im.height, out=mask
                )
        masks[im.id] = mask
    return masks


def _splitmix64(state):
    """One step of the splitmix64 generator; returns (value, next_state)."""
    state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31), state


def _shuffled(n, seed):
    """Fisher-Yates shuffle of range(n) driven by splitmix64(seed).

    Fixed algorithm so any implementation seeded identically produces the
    same split.
    """
    idx = list(range(n))
    state = seed & 0xFFFFFFFFFFFFFFFF
    for i in range(n - 1, 0, -1):
        z, state = _splitmix64(state)
        j = z % (i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def split_dataset(dataset, n_train, seed):
    """Deterministic seeded split into (train, test) by whole images.

    Annotations follow their image; categories are copied to both sides.
    """
    n = len(dataset.images)
    if not 0 <= n_train <= n:
        raise ValueError(f"n_train {n_train} out of range 0..{n}")
    order = _shuffled(n, seed)
    train_ids = {dataset.images[i].id for i in order[:n_train]}

    def side(keep):
        images = tuple(im for im in dataset.images if (im.id in train_ids) == keep)
        ids = {im.id for im in images}
        anns = tuple(a for a in dataset.annotations if a.image_id in ids)
        return CocoDataset(images=images, categories=dataset.categories, annotations=anns)

    return side(True), side(False)
