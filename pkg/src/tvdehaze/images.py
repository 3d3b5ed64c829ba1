"""8-bit image file I/O (PNG, binary PPM/PGM) via Pillow."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import DehazeError

log = logging.getLogger(__name__)

SUFFIXES = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM", ".pnm": "PPM"}


class ImageIOError(DehazeError, OSError):
    """An image could not be read or written."""


def read_image(path) -> np.ndarray:
    """Load an image as float64 in ``[0, 255]``: ``(H, W)`` or ``(H, W, 3)``.

    16-bit data is rescaled to the 8-bit range with a warning; an alpha channel
    is dropped.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                log.warning("%s: 16-bit image rescaled to [0, 255]", path)
                arr = np.asarray(im, dtype=np.float64)
                return np.clip(arr, 0, 65535) * (255.0 / 65535.0)
            if mode in ("LA", "RGBA", "PA"):
                log.warning("%s: alpha channel ignored", path)
            if mode in ("1", "L", "LA"):
                return np.asarray(im.convert("L"), dtype=np.float64)
            return np.asarray(im.convert("RGB"), dtype=np.float64)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise ImageIOError(f"cannot read {path}: {exc}") from exc


def quantize(arr) -> np.ndarray:
    """Round to nearest (ties away from zero) and clip to uint8."""
    arr = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 255.0)
    return np.floor(arr + 0.5).astype(np.uint8)


def write_image(path, arr) -> None:
    """Write a ``(H, W)`` or ``(H, W, 3)`` array; float input is quantized."""
    path = Path(path)
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        arr = quantize(arr)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    fmt = SUFFIXES.get(path.suffix.lower())
    if fmt is None:
        raise ImageIOError(f"unsupported output format {path.suffix!r}")
    if path.suffix.lower() == ".pgm" and arr.ndim == 3:
        raise ImageIOError("PGM output needs a single-channel image")
    if path.suffix.lower() == ".ppm" and arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    try:
        Image.fromarray(arr).save(path, format=fmt)
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc
