"""Grayscale image reading and PGM writing.

Images are float arrays in [0, 1] of shape ``(height, width)``. 8-bit
values map by ``v / 255`` on input and ``round(v * 255)`` on output.
"""
from pathlib import Path

import numpy as np

from .exceptions import FormatError

__all__ = ["read_image", "read_pgm", "write_pgm", "to_gray", "pgm_bytes"]

_BT601 = np.array([0.299, 0.587, 0.114])


def _tokens(data: bytes, count: int):
    """Split the first ``count`` whitespace-separated header tokens, skipping comments."""
    out, i = [], 0
    while len(out) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if j == i:
            raise FormatError("truncated PGM header")
        out.append(data[i:j])
        i = j
    return out, i + 1  # one whitespace byte separates header and raster


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (magic, w, h, maxval), start = _tokens(data, 4)
    if magic != b"P5":
        raise FormatError(f"not a binary PGM (magic {magic!r})")
    w, h, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 65536:
        raise FormatError(f"bad maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.uint8
    raster = np.frombuffer(data, dtype=dtype, count=w * h, offset=start)
    return raster.reshape(h, w).astype(np.float64) / maxval


def to_gray(pixels) -> np.ndarray:
    """8-bit array (gray, RGB or RGBA) to float luma in [0, 1]."""
    a = np.asarray(pixels, dtype=np.float64)
    if a.ndim == 3:
        a = a[..., :3] @ _BT601 if a.shape[-1] >= 3 else a[..., 0]
    return a / 255.0


def read_image(path) -> np.ndarray:
    """Read a PGM directly or anything Pillow understands (PNG etc.)."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"P5":
        return read_pgm(path)
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            return np.asarray(im, dtype=np.float64) / 65535.0
        if im.mode not in ("L", "RGB", "RGBA"):
            im = im.convert("RGB")
        return to_gray(np.asarray(im))


def pgm_bytes(image) -> bytes:
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    if img.ndim != 2:
        raise FormatError("PGM output needs a 2-D image")
    raster = np.floor(img * 255.0 + 0.5).astype(np.uint8)
    h, w = raster.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + raster.tobytes()


def write_pgm(path, image) -> None:
    Path(path).write_bytes(pgm_bytes(image))
