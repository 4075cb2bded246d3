"""Grayscale/binary image containers and netpbm (PGM/PPM) file I/O.

Conventions used throughout the package: row-major storage, origin at the
top-left corner, ``x`` is the column index and ``y`` the row index.  Images
are treated as immutable values; every operation returns a fresh image.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np


class PnmError(ValueError):
    """Malformed or unsupported netpbm content."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("GrayImage needs a non-empty 2-D array")
        object.__setattr__(self, "pixels", _frozen(px.copy()))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class BinaryImage:
    """Boolean mask, shape (height, width)."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise ValueError("BinaryImage needs a non-empty 2-D array")
        object.__setattr__(self, "bits", _frozen(b.copy()))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BinaryImage) and np.array_equal(self.bits, other.bits)


@dataclass(frozen=True)
class RgbImage:
    """24-bit RGB raster, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError("RgbImage needs a (h, w, 3) array")
        object.__setattr__(self, "pixels", _frozen(px.copy()))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RgbImage) and np.array_equal(self.pixels, other.pixels)


AnyImage = Union[GrayImage, BinaryImage, RgbImage]

_WHITESPACE = b" \t\r\n\v\f"


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PnmError("unexpected end of header")
    return data[start:pos], pos


def _read_int(data: bytes, pos: int) -> tuple[int, int]:
    tok, pos = _read_token(data, pos)
    if not tok.isdigit():
        raise PnmError(f"expected integer in header, got {tok!r}")
    return int(tok), pos


def decode_pgm(data: bytes) -> GrayImage:
    """Parse a P2 (plain) or P5 (raw) PGM; maxval must be 255."""
    magic, pos = _read_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise PnmError(f"unsupported magic {magic!r}; expected P2 or P5")
    width, pos = _read_int(data, pos)
    height, pos = _read_int(data, pos)
    maxval, pos = _read_int(data, pos)
    if width < 1 or height < 1:
        raise PnmError("image dimensions must be positive")
    if maxval != 255:
        raise PnmError(f"only maxval 255 is supported, got {maxval}")
    if magic == b"P5":
        pos += 1  # single whitespace byte separates header and payload
        payload = data[pos : pos + width * height]
        if len(payload) != width * height:
            raise PnmError("truncated P5 payload")
        px = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    else:
        values = []
        try:
            for _ in range(width * height):
                v, pos = _read_int(data, pos)
                if v > 255:
                    raise PnmError(f"sample {v} exceeds maxval")
                values.append(v)
        except PnmError as exc:
            raise PnmError(f"bad P2 payload: {exc}") from exc
        px = np.array(values, dtype=np.uint8).reshape(height, width)
    return GrayImage(px)


def encode_pgm(img: GrayImage | BinaryImage) -> bytes:
    """Canonical raw P5 bytes; BinaryImage is written as 0/255."""
    if isinstance(img, BinaryImage):
        payload = np.where(img.bits, 255, 0).astype(np.uint8)
    else:
        payload = img.pixels
    header = b"P5\n%d %d\n255\n" % (payload.shape[1], payload.shape[0])
    return header + payload.tobytes()


def encode_ppm(img: RgbImage) -> bytes:
    header = b"P6\n%d %d\n255\n" % (img.width, img.height)
    return header + img.pixels.tobytes()


def decode_ppm(data: bytes) -> RgbImage:
    magic, pos = _read_token(data, 0)
    if magic != b"P6":
        raise PnmError(f"unsupported magic {magic!r}; expected P6")
    width, pos = _read_int(data, pos)
    height, pos = _read_int(data, pos)
    maxval, pos = _read_int(data, pos)
    if maxval != 255:
        raise PnmError(f"only maxval 255 is supported, got {maxval}")
    pos += 1
    payload = data[pos : pos + 3 * width * height]
    if len(payload) != 3 * width * height:
        raise PnmError("truncated P6 payload")
    return RgbImage(np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3))


def load_image(path: str | os.PathLike) -> GrayImage:
    """Load a PGM file (P2 or P5, maxval 255) with exact pixel values."""
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def save_image(img: AnyImage, path: str | os.PathLike) -> None:
    """Write P5 for gray/binary images, P6 for RGB."""
    data = encode_ppm(img) if isinstance(img, RgbImage) else encode_pgm(img)
    with open(path, "wb") as fh:
        fh.write(data)


def to_binary(img: GrayImage) -> BinaryImage:
    """Nonzero pixels become True (reads back masks written as 0/255)."""
    return BinaryImage(img.pixels > 0)


MARKER_COLOR = (255, 0, 0)


def overlay_ellipses(img: GrayImage, ellipses: Iterable, color: tuple[int, int, int] = MARKER_COLOR) -> RgbImage:
    """RGB copy of `img` with each ellipse perimeter drawn in `color`.

    Perimeter pixels come from the same rasterizer the detector scores with,
    so the overlay shows exactly the tested points; points outside the frame
    are clipped by the rasterizer and ignored here.
    """
    from .raster import EmptyPerimeter, rasterize

    rgb = np.repeat(img.pixels[:, :, None], 3, axis=2).copy()
    for e in ellipses:
        try:
            perim = rasterize(e, (img.width, img.height))
        except EmptyPerimeter:
            continue
        rgb[perim.points[:, 1], perim.points[:, 0]] = color
    return RgbImage(rgb)
