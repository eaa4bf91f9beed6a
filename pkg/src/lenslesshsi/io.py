"""Binary cube/image formats, PNG previews and CSV tables.

HSC1 (cubes)::

    b"HSC1" | u32 n_lambda | u32 ny | u32 nx | f32[n_lambda] wavelengths_nm
            | f32[n_lambda * ny * nx] data (channel, then row, then column)

IMG1 (2D images)::

    b"IMG1" | u32 ny | u32 nx | f32[ny * nx] data (row-major)

All integers and floats are little-endian.
"""

import csv
import struct

import numpy as np
from PIL import Image

from .core import FilterFunction, HyperspectralCube, Measurement, Psf

__all__ = [
    "FormatError",
    "BadMagicError",
    "TruncatedFileError",
    "NonFiniteDataError",
    "read_cube",
    "write_cube",
    "read_filter",
    "read_image",
    "read_psf",
    "write_image",
    "write_png_preview",
    "write_csv",
    "read_csv",
]

CUBE_MAGIC = b"HSC1"
IMAGE_MAGIC = b"IMG1"
_F32 = np.dtype("<f4")


class FormatError(ValueError):
    """A file does not follow the expected layout."""

    code = "format"


class BadMagicError(FormatError):
    code = "bad_magic"


class TruncatedFileError(FormatError):
    code = "truncated"


class NonFiniteDataError(FormatError):
    code = "non_finite"


def _read_header(raw, magic, n_dims, path):
    if raw[:4] != magic:
        raise BadMagicError(f"{path}: expected magic {magic!r}, found {raw[:4]!r}")
    end = 4 + 4 * n_dims
    if len(raw) < end:
        raise TruncatedFileError(f"{path}: header truncated ({len(raw)} bytes)")
    return struct.unpack(f"<{n_dims}I", raw[4:end]), end


def _read_floats(raw, offset, count, path):
    need = offset + 4 * count
    if len(raw) < need:
        raise TruncatedFileError(f"{path}: expected {need} bytes, found {len(raw)}")
    if len(raw) > need:
        raise FormatError(f"{path}: {len(raw) - need} trailing bytes")
    return np.frombuffer(raw, dtype=_F32, count=count, offset=offset).astype(np.float64)


def _check_finite(arr, path):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteDataError(f"{path}: payload contains NaN or Inf")


def _read_cube_arrays(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    (k, ny, nx), off = _read_header(raw, CUBE_MAGIC, 3, path)
    if k == 0 or ny == 0 or nx == 0:
        raise FormatError(f"{path}: zero dimension ({k}, {ny}, {nx})")
    need_wl = off + 4 * k
    if len(raw) < need_wl:
        raise TruncatedFileError(f"{path}: wavelengths truncated")
    wl = np.frombuffer(raw, dtype=_F32, count=k, offset=off).astype(np.float64)
    data = _read_floats(raw, need_wl, k * ny * nx, path).reshape(k, ny, nx)
    _check_finite(wl, path)
    _check_finite(data, path)
    return wl, data


def read_cube(path):
    """Load an HSC1 file as a :class:`HyperspectralCube`."""
    wl, data = _read_cube_arrays(path)
    try:
        return HyperspectralCube(data, wl)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def read_filter(path):
    """Load an HSC1 file as a :class:`FilterFunction` (geometry metadata is not stored)."""
    wl, data = _read_cube_arrays(path)
    try:
        return FilterFunction(data, wl)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_cube(path, cube):
    """Write a cube or filter function as HSC1 (float32)."""
    data = np.ascontiguousarray(cube.data, dtype=_F32)
    wl = np.ascontiguousarray(cube.wavelengths_nm, dtype=_F32)
    k, ny, nx = data.shape
    with open(path, "wb") as fh:
        fh.write(CUBE_MAGIC)
        fh.write(struct.pack("<3I", k, ny, nx))
        fh.write(wl.tobytes())
        fh.write(data.tobytes())


def _read_image_array(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    (ny, nx), off = _read_header(raw, IMAGE_MAGIC, 2, path)
    if ny == 0 or nx == 0:
        raise FormatError(f"{path}: zero dimension ({ny}, {nx})")
    data = _read_floats(raw, off, ny * nx, path).reshape(ny, nx)
    _check_finite(data, path)
    return data


def read_image(path):
    """Load an IMG1 file as a :class:`Measurement`."""
    return Measurement(_read_image_array(path))


def read_psf(path):
    """Load an IMG1 file as a unit-sum :class:`Psf`."""
    try:
        return Psf(_read_image_array(path))
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: {exc}") from exc


def write_image(path, image):
    """Write a :class:`Measurement`, :class:`Psf` or 2D array as IMG1 (float32)."""
    data = getattr(image, "data", image)
    data = np.ascontiguousarray(data, dtype=_F32)
    if data.ndim != 2:
        raise ValueError("IMG1 holds 2-D images only")
    with open(path, "wb") as fh:
        fh.write(IMAGE_MAGIC)
        fh.write(struct.pack("<2I", *data.shape))
        fh.write(data.tobytes())


def preview_bytes(image):
    """Min-max normalize to uint8; a constant image maps to all zeros."""
    data = np.asarray(getattr(image, "data", image), dtype=np.float64)
    lo, hi = data.min(), data.max()
    if hi == lo:
        return np.zeros(data.shape, dtype=np.uint8)
    return np.rint(255.0 * (data - lo) / (hi - lo)).astype(np.uint8)


def write_png_preview(path, image):
    """8-bit grayscale PNG for eyeballing an image."""
    Image.fromarray(preview_bytes(image)).save(path, format="PNG")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path):
    """Return (header, rows) with rows as lists of strings."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)
