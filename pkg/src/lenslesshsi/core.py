"""Domain types and the linear measurement operator of the lensless spectral camera.

The operator maps a datacube ``v[λ, y, x]`` to a sensor image::

    b = sum_λ F_λ · crop(h * v_λ)

where ``*`` is a full 2D linear convolution with the point spread function ``h``
and ``crop`` keeps the centered sensor-sized window.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .validation import (
    ShapeMismatchError,
    check_finite_array,
    check_positive_int,
    check_shape2,
    check_wavelengths,
)

__all__ = [
    "HyperspectralCube",
    "Psf",
    "FilterFunction",
    "Measurement",
    "SystemModel",
    "convolve2d_full",
    "crop_center",
    "crop_offsets",
    "forward",
    "adjoint",
    "operator_norm",
]


@dataclass(frozen=True, eq=False)
class HyperspectralCube:
    """Spectral irradiance ``data[λ, y, x]`` with per-channel wavelengths.

    If ``wavelengths_nm`` is omitted the channel index is used.
    """

    data: np.ndarray
    wavelengths_nm: np.ndarray = None

    def __post_init__(self):
        data = check_finite_array(self.data, 3, "cube data")
        wl = self.wavelengths_nm
        if wl is None:
            wl = np.arange(data.shape[0], dtype=np.float64)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "wavelengths_nm", check_wavelengths(wl, data.shape[0]))

    @property
    def n_lambda(self):
        return self.data.shape[0]

    @property
    def ny(self):
        return self.data.shape[1]

    @property
    def nx(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def with_data(self, data):
        """Return a cube with the same wavelengths and new voxel values."""
        return HyperspectralCube(data, self.wavelengths_nm)


@dataclass(frozen=True, eq=False)
class Psf:
    """Wavelength-invariant point spread function ``h[y, x]``.

    The PSF is rescaled to unit sum unless ``normalize=False``; the raw form is
    only meant for scale experiments.
    """

    data: np.ndarray
    normalize: bool = field(default=True, repr=False)

    def __post_init__(self):
        data = check_finite_array(self.data, 2, "psf")
        if np.any(data < 0):
            raise ValueError("psf has negative entries")
        total = data.sum()
        if total <= 0:
            raise ValueError("psf sums to zero")
        if self.normalize:
            data = data / total
        object.__setattr__(self, "data", data)

    @property
    def ny(self):
        return self.data.shape[0]

    @property
    def nx(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class FilterFunction:
    """Per-channel transmittance ``data[λ, y, x]`` of the filter array, in [0, 1].

    ``superpixel`` is the (rows, cols) of the repeating tile in filter pixels and
    ``filter_px`` the lateral filter-pixel size in sensor pixels; both are
    informational and may be ``None`` for filter maps loaded from disk.
    """

    data: np.ndarray
    wavelengths_nm: np.ndarray = None
    superpixel: tuple = None
    filter_px: int = None

    def __post_init__(self):
        data = check_finite_array(self.data, 3, "filter function")
        if data.min() < 0 or data.max() > 1:
            raise ValueError("filter transmittance must lie in [0, 1]")
        wl = self.wavelengths_nm
        if wl is None:
            wl = np.arange(data.shape[0], dtype=np.float64)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "wavelengths_nm", check_wavelengths(wl, data.shape[0]))
        if self.superpixel is not None:
            object.__setattr__(self, "superpixel", check_shape2(tuple(self.superpixel), "superpixel"))
        if self.filter_px is not None:
            object.__setattr__(self, "filter_px", check_positive_int(self.filter_px, "filter_px"))

    @property
    def n_lambda(self):
        return self.data.shape[0]

    @property
    def ny(self):
        return self.data.shape[1]

    @property
    def nx(self):
        return self.data.shape[2]

    @property
    def sensor_shape(self):
        return self.data.shape[1:]

    @property
    def superpixel_px(self):
        """Super-pixel edge length in sensor pixels, when the geometry is known."""
        if self.superpixel is None or self.filter_px is None:
            return None
        return self.superpixel[1] * self.filter_px


@dataclass(frozen=True, eq=False)
class Measurement:
    """Sensor image ``data[y, x]``."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", check_finite_array(self.data, 2, "measurement"))

    @property
    def ny(self):
        return self.data.shape[0]

    @property
    def nx(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape


def crop_offsets(full_shape, out_shape):
    """Top-left corner of the centered window; odd remainders favour the low side."""
    fy, fx = full_shape
    oy, ox = out_shape
    if oy > fy or ox > fx:
        raise ShapeMismatchError(f"crop {out_shape} larger than input {full_shape}")
    return (fy - oy) // 2, (fx - ox) // 2


def crop_center(full, out_shape):
    """Centered ``out_shape`` window of ``full`` (last two axes).

    When the size difference along an axis is odd, the extra row or column is
    dropped from the high-index side.
    """
    full = np.asarray(full)
    out_shape = check_shape2(tuple(out_shape), "out_shape")
    y0, x0 = crop_offsets(full.shape[-2:], out_shape)
    return full[..., y0:y0 + out_shape[0], x0:x0 + out_shape[1]]


def _psf_array(psf):
    if isinstance(psf, Psf):
        return psf.data
    return check_finite_array(psf, 2, "psf")


def convolve2d_full(plane, psf):
    """Full linear 2D convolution through a zero-padded real FFT.

    Parameters
    ----------
    plane : array_like, shape (..., ny, nx)
        Image, or a stack of images along leading axes.
    psf : Psf or array_like, shape (py, px)

    Returns
    -------
    ndarray, shape (..., ny + py - 1, nx + px - 1)
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim < 2:
        raise ValueError("plane must be at least 2-D")
    if not np.all(np.isfinite(plane)):
        raise ValueError("plane contains NaN or Inf")
    h = _psf_array(psf)
    full = (plane.shape[-2] + h.shape[0] - 1, plane.shape[-1] + h.shape[1] - 1)
    fft_shape = tuple(sfft.next_fast_len(n, real=True) for n in full)
    spec = sfft.rfft2(plane, s=fft_shape) * sfft.rfft2(h, s=fft_shape)
    return sfft.irfft2(spec, s=fft_shape)[..., :full[0], :full[1]]


class SystemModel:
    """Linear operator ``A`` built from a PSF, a filter function and a scene grid.

    The PSF spectrum is computed once at construction; instances are read-only
    afterwards, so concurrent use from several threads is safe.

    Parameters
    ----------
    psf : Psf
    filter : FilterFunction
        Its (ny, nx) defines the sensor grid.
    scene_shape : tuple of int, optional
        Scene grid (ny, nx). Defaults to the sensor grid.
    """

    def __init__(self, psf, filter, scene_shape=None):
        if not isinstance(psf, Psf):
            raise TypeError("psf must be a Psf")
        if not isinstance(filter, FilterFunction):
            raise TypeError("filter must be a FilterFunction")
        if scene_shape is None:
            scene_shape = filter.sensor_shape
        scene_shape = check_shape2(tuple(scene_shape), "scene_shape")
        full = (scene_shape[0] + psf.ny - 1, scene_shape[1] + psf.nx - 1)
        if full[0] < filter.ny or full[1] < filter.nx:
            raise ShapeMismatchError(
                f"full convolution {full} smaller than sensor {filter.sensor_shape}")
        self._psf = psf
        self._filter = filter
        self._scene_shape = scene_shape
        self._full_shape = full
        self._fft_shape = tuple(sfft.next_fast_len(n, real=True) for n in full)
        self._offset = crop_offsets(full, filter.sensor_shape)
        self._psf_spec = sfft.rfft2(psf.data, s=self._fft_shape)
        self._psf_spec.setflags(write=False)

    psf = property(lambda self: self._psf)
    filter = property(lambda self: self._filter)
    scene_shape = property(lambda self: self._scene_shape)
    full_shape = property(lambda self: self._full_shape)

    @property
    def sensor_shape(self):
        return self._filter.sensor_shape

    @property
    def n_lambda(self):
        return self._filter.n_lambda

    @property
    def cube_shape(self):
        return (self.n_lambda,) + self._scene_shape

    @property
    def wavelengths_nm(self):
        return self._filter.wavelengths_nm

    def __repr__(self):
        return (f"SystemModel(scene={self._scene_shape}, sensor={self.sensor_shape}, "
                f"psf={self._psf.shape}, n_lambda={self.n_lambda})")

    def with_psf(self, psf):
        return SystemModel(psf, self._filter, self._scene_shape)

    # Array-level operator, used by the solver hot loop.
    def apply(self, x):
        """``A x`` for a raw ``(K, ny_scene, nx_scene)`` array."""
        if x.shape != self.cube_shape:
            raise ShapeMismatchError(f"cube shape {x.shape} != model {self.cube_shape}")
        spec = sfft.rfft2(x, s=self._fft_shape) * self._psf_spec
        conv = sfft.irfft2(spec, s=self._fft_shape)
        y0, x0 = self._offset
        ny, nx = self.sensor_shape
        w = conv[:, y0:y0 + ny, x0:x0 + nx]
        return np.einsum("kyx,kyx->yx", self._filter.data, w)

    def apply_adjoint(self, y):
        """``Aᵀ y`` for a raw ``(ny_sensor, nx_sensor)`` array."""
        if y.shape != self.sensor_shape:
            raise ShapeMismatchError(f"measurement shape {y.shape} != sensor {self.sensor_shape}")
        masked = np.zeros((self.n_lambda,) + self._fft_shape)
        y0, x0 = self._offset
        ny, nx = self.sensor_shape
        masked[:, y0:y0 + ny, x0:x0 + nx] = self._filter.data * y
        # Circular correlation over a frame >= the full size never wraps for
        # the scene-sized output we keep.
        spec = sfft.rfft2(masked) * np.conj(self._psf_spec)
        corr = sfft.irfft2(spec, s=self._fft_shape)
        return corr[:, :self._scene_shape[0], :self._scene_shape[1]]


def _cube_array(model, v):
    data = v.data if isinstance(v, HyperspectralCube) else check_finite_array(v, 3, "cube")
    if data.shape != model.cube_shape:
        raise ShapeMismatchError(f"cube shape {data.shape} != model {model.cube_shape}")
    return data


def forward(model, v):
    """Simulate the sensor image of cube ``v``; returns a :class:`Measurement`."""
    return Measurement(model.apply(_cube_array(model, v)))


def adjoint(model, b):
    """Apply the transpose operator to a sensor image; returns a cube on the scene grid."""
    data = b.data if isinstance(b, Measurement) else check_finite_array(b, 2, "measurement")
    if data.shape != model.sensor_shape:
        raise ShapeMismatchError(f"measurement shape {data.shape} != sensor {model.sensor_shape}")
    return HyperspectralCube(model.apply_adjoint(data), model.wavelengths_nm)


def operator_norm(model, max_iters=200, tol=1e-8, seed=0):
    """Largest eigenvalue of ``AᵀA`` by power iteration.

    The start vector is drawn from ``numpy.random.default_rng(seed)``, so the
    estimate is reproducible. Iteration stops once successive estimates agree
    to ``tol`` relative, or after ``max_iters`` steps.
    """
    max_iters = check_positive_int(max_iters, "max_iters")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(model.cube_shape)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(max_iters):
        y = model.apply_adjoint(model.apply(x))
        new = float(np.linalg.norm(y))
        if new == 0.0:
            return 0.0
        x = y / new
        if abs(new - estimate) <= tol * new:
            return new
        estimate = new
    return estimate
