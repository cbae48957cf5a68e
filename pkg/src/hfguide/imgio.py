"""Image buffers and file I/O.

An image buffer is a float64 (H, W, C) array with values in [0, 1] and
C in {1, 3}. PPM (P6) and PGM (P5) are written binary, 8-bit, maxval 255
and are bit-exact in golden tests; PNG goes through Pillow for user-facing
output. Quantization at write time is round(v * 255).
"""
from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .errors import InvalidArgumentError, MalformedImageError, UnsupportedFormatError


def ensure_image(image):
    """Validate and return an (H, W, C) float64 buffer with C in {1, 3}."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise InvalidArgumentError(f"expected (H,W,1|3) image, got shape {np.shape(image)}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("image contains non-finite values")
    return arr


def clamp01(image):
    return np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)


def quantize8(image):
    """[0,1] floats -> uint8 via round(v * 255)."""
    return np.rint(clamp01(image) * 255.0).astype(np.uint8)


def _infer_format(path, fmt):
    if fmt is not None:
        return fmt.upper()
    ext = os.path.splitext(path)[1].lower()
    table = {".ppm": "PPM", ".pgm": "PGM", ".png": "PNG"}
    if ext not in table:
        raise UnsupportedFormatError(f"cannot infer image format from {path!r}")
    return table[ext]


def write_image(path, image, fmt=None):
    image = ensure_image(clamp01(image))
    fmt = _infer_format(path, fmt)
    q = quantize8(image)
    if fmt == "PGM":
        if image.shape[2] != 1:
            raise InvalidArgumentError("PGM requires a single-channel image")
        header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
        with open(path, "wb") as f:
            f.write(header + q[:, :, 0].tobytes())
    elif fmt == "PPM":
        if image.shape[2] != 3:
            raise InvalidArgumentError("PPM requires a 3-channel image")
        header = f"P6\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
        with open(path, "wb") as f:
            f.write(header + q.tobytes())
    elif fmt == "PNG":
        if image.shape[2] == 1:
            Image.fromarray(q[:, :, 0], mode="L").save(path, format="PNG")
        else:
            Image.fromarray(q, mode="RGB").save(path, format="PNG")
    else:
        raise UnsupportedFormatError(f"unsupported image format: {fmt}")


def _read_pnm_token(f):
    """Next whitespace-delimited token, skipping '#' comments."""
    tok = b""
    while True:
        ch = f.read(1)
        if ch == b"":
            if tok:
                return tok
            raise MalformedImageError("unexpected end of header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = f.read(1)
            continue
        if ch.isspace():
            if tok:
                return tok
            continue
        tok += ch


def read_image(path):
    """Read PPM/PGM/PNG into a [0,1] float buffer."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as f:
        magic = f.read(2)
    if magic in (b"P5", b"P6"):
        return _read_pnm(path, magic)
    if magic == b"\x89P":
        try:
            with Image.open(path) as im:
                im = im.convert("L" if im.mode in ("L", "1", "I;16") else "RGB")
                arr = np.asarray(im, dtype=np.float64) / 255.0
        except Exception as exc:
            raise MalformedImageError(f"failed to decode PNG {path!r}: {exc}") from exc
        return ensure_image(arr)
    raise UnsupportedFormatError(f"unrecognized image file {path!r} (magic {magic!r})")


def _read_pnm(path, magic):
    with open(path, "rb") as f:
        got = f.read(2)
        if got != magic:
            raise MalformedImageError("inconsistent magic")
        try:
            width = int(_read_pnm_token(f))
            height = int(_read_pnm_token(f))
            maxval = int(_read_pnm_token(f))
        except ValueError as exc:
            raise MalformedImageError(f"bad header field in {path!r}") from exc
        if width <= 0 or height <= 0:
            raise MalformedImageError(f"bad dimensions in {path!r}")
        if maxval != 255:
            raise MalformedImageError(f"only maxval 255 supported, got {maxval}")
        channels = 3 if magic == b"P6" else 1
        n = width * height * channels
        payload = f.read(n)
        if len(payload) != n:
            raise MalformedImageError(
                f"truncated payload in {path!r}: expected {n} bytes, got {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    return arr.reshape(height, width, channels)
