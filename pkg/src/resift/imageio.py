"""Image decoding and raw float map persistence.

Two pixel carriers live here: RgbImage (8-bit RGB input buffers) and
ScalarMap (2-D float grids used by every processing stage).  Maps are
persisted as raw little-endian float32 plus a ``.meta`` text sidecar so
intermediate results can be diffed from any language.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptFile, ImageTooSmall, IoFailure, SizeMismatch, UnsupportedFormat

# Magic prefixes of the formats we accept (LIVE/MULTI ship as BMP; synthetic
# assets as PNG/PPM).  Anything else is rejected before Pillow gets a say.
_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_BMP_MAGIC = b"BM"
_PNM_MAGICS = (b"P5", b"P6")

# Pillow modes that decode to 8 bits per channel.
_EIGHT_BIT_MODES = {"1", "L", "LA", "P", "PA", "RGB", "RGBA", "RGBX"}

MIN_IMAGE_SIDE = 32


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB pixel buffer, shape (height, width, 3), row-major."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise ValueError("RgbImage.data must be a (H, W, 3) uint8 array")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("RgbImage must contain at least one pixel")
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class ScalarMap:
    """2-D grid of finite float values, shape (height, width), row-major."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("ScalarMap.values must be 2-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("ScalarMap must contain at least one element")
        if not np.isfinite(arr).all():
            raise ValueError("ScalarMap values must all be finite")
        object.__setattr__(self, "values", np.ascontiguousarray(arr))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @staticmethod
    def from_array(arr) -> "ScalarMap":
        return ScalarMap(np.asarray(arr, dtype=np.float64))


def _sniff_format(header: bytes) -> str:
    if header.startswith(_PNG_MAGIC):
        return "png"
    if header.startswith(_BMP_MAGIC):
        return "bmp"
    if header[:2] in _PNM_MAGICS:
        return "pnm"
    raise UnsupportedFormat("not a PNG, BMP, or binary PPM/PGM file")


def load_image(path, min_size: int = MIN_IMAGE_SIDE) -> RgbImage:
    """Decode a PNG, BMP, or binary PPM/PGM file into an RgbImage.

    Grayscale inputs are replicated into three identical channels and alpha
    channels are dropped.  Images smaller than ``min_size`` on either side
    are rejected; the scale-space stages need MIN_IMAGE_SIDE, decode-only
    callers may pass a smaller bound.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(raw) < 8:
        raise CorruptFile(f"{path}: file too short to hold an image header")
    _sniff_format(raw[:8])
    try:
        with Image.open(io.BytesIO(raw)) as img:
            if img.mode not in _EIGHT_BIT_MODES:
                raise UnsupportedFormat(f"{path}: mode {img.mode} is not 8-bit")
            rgb = img.convert("RGB")
            data = np.asarray(rgb, dtype=np.uint8)
    except UnsupportedFormat:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if data.shape[0] < min_size or data.shape[1] < min_size:
        raise ImageTooSmall(
            f"{path}: {data.shape[1]}x{data.shape[0]} is below the {min_size}x{min_size} minimum"
        )
    return RgbImage(data)


def _format_number(v: float) -> str:
    # Integral values print without a trailing ".0" so sidecars stay terse.
    f = float(v)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def dump_map(smap: ScalarMap, path) -> None:
    """Write raw little-endian float32 values, row-major, plus a ``.meta``
    sidecar holding ``width height min max``."""
    payload = smap.values.astype("<f4").tobytes(order="C")
    meta = "{} {} {} {}\n".format(
        smap.width,
        smap.height,
        _format_number(float(smap.values.min())),
        _format_number(float(smap.values.max())),
    )
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
        with open(f"{path}.meta", "w", encoding="utf-8") as fh:
            fh.write(meta)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_map(path) -> ScalarMap:
    """Inverse of dump_map."""
    meta_path = f"{path}.meta"
    try:
        with open(meta_path, "r", encoding="utf-8") as fh:
            fields = fh.read().split()
        with open(path, "rb") as fh:
            payload = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(fields) != 4:
        raise SizeMismatch(f"{meta_path}: expected 'width height min max'")
    try:
        width, height = int(fields[0]), int(fields[1])
    except ValueError as exc:
        raise SizeMismatch(f"{meta_path}: non-integer dimensions") from exc
    if width < 1 or height < 1:
        raise SizeMismatch(f"{meta_path}: dimensions must be positive")
    expected = width * height * 4
    if len(payload) != expected:
        raise SizeMismatch(
            f"{path}: payload holds {len(payload)} bytes, meta implies {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(height, width)
    return ScalarMap(values)


def ensure_parent_dir(path) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
