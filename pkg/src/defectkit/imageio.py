"""Image file I/O: 8-bit PNG (via Pillow) and PGM P2/P5.

PGM is the dependency-free fixture format used by the test-suite; PNG is
the format real radiographs arrive in. Masks are written as PGM with
0 = background and 255 = defect, matching the black/white ground-truth
convention.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image


def load_image(path):
    """Load an 8-bit grayscale image; RGB input is collapsed by luma.

    Luma uses round(0.299 R + 0.587 G + 0.114 B) so the conversion is
    bit-reproducible across platforms.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if str(path).lower().endswith(".pgm"):
        return _load_pgm(path)
    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        if im.mode in ("RGB", "RGBA"):
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
            luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
            return np.round(luma).astype(np.uint8)
        if im.mode == "I;16":
            raise ValueError(f"unsupported bit depth: 16-bit {im.format}")
        if im.mode == "P":
            return np.asarray(im.convert("L"), dtype=np.uint8)
        raise ValueError(f"unsupported image mode {im.mode} ({im.format})")


def _load_pgm(path):
    with open(path, "rb") as f:
        data = f.read()
    tokens = _pgm_tokens(data)
    magic = next(tokens)
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"unsupported format: {magic.decode('ascii', 'replace')} (expected PGM P2/P5)")
    width = int(next(tokens))
    height = int(next(tokens))
    maxval = int(next(tokens))
    if maxval > 255:
        raise ValueError(f"unsupported bit depth: PGM maxval {maxval} > 255")
    if magic == b"P2":
        values = [int(next(tokens)) for _ in range(width * height)]
        arr = np.array(values, dtype=np.uint8)
    else:
        # raster starts one whitespace byte after maxval
        header_end = data.index(str(maxval).encode()) + len(str(maxval)) + 1
        arr = np.frombuffer(data[header_end : header_end + width * height], dtype=np.uint8)
        if arr.size != width * height:
            raise ValueError("truncated PGM raster")
    return arr.reshape(height, width)


def _pgm_tokens(data):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i = 0
    while i < len(data):
        if data[i : i + 1].isspace():
            i += 1
        elif data[i : i + 1] == b"#":
            i = data.index(b"\n", i) + 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            yield data[i:j]
            i = j


def save_pgm(path, image):
    """Write a grayscale image (or bool mask as 0/255) as binary PGM."""
    arr = np.asarray(image)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    arr = arr.astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(arr.tobytes())


def save_png(path, image):
    """Write an 8-bit grayscale or RGB image as PNG."""
    arr = np.asarray(image, dtype=np.uint8)
    Image.fromarray(arr).save(path, format="PNG")
